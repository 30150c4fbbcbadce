"""Time-delay embedding and recurrence quantification analysis."""

from dataclasses import dataclass, astuple

import numpy as np
from numba import njit

from ..errors import ConfigError, ShapeError

TAU_CAP = 20


@dataclass(frozen=True)
class RqaFeatures:
    rr: float
    det: float
    lam: float
    entr: float
    tt: float

    def vector(self):
        return np.array(astuple(self))


def embed(series, m=3, tau=1):
    x = np.asarray(series, dtype=float).ravel()
    if m < 1 or tau < 1:
        raise ConfigError("embedding dimension and delay must be >= 1")
    n = x.size - (m - 1) * tau
    if n <= 0:
        raise ShapeError(f"series of length {x.size} too short for m={m}, tau={tau}")
    return np.stack([x[j * tau: j * tau + n] for j in range(m)], axis=1)


def autocorr_delay(series, cap=TAU_CAP):
    """First local minimum of the autocorrelation, capped at ``cap`` samples."""
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    denom = float(x @ x)
    if denom == 0.0:
        return 1
    ac = np.array([float(x[:-k] @ x[k:]) / denom for k in range(1, cap + 2)])
    for k in range(1, len(ac) - 1):
        if ac[k] < ac[k - 1] and ac[k] <= ac[k + 1]:
            return k + 1
    return cap


@njit(cache=True)
def _recurrence(points, eps, w):
    n = points.shape[0]
    R = np.zeros((n, n), dtype=np.uint8)
    e2 = eps * eps
    for i in range(n):
        for j in range(i + w + 1, n):
            d = 0.0
            for k in range(points.shape[1]):
                diff = points[i, k] - points[j, k]
                d += diff * diff
            if d <= e2:
                R[i, j] = 1
                R[j, i] = 1
    return R


def recurrence_matrix(points, eps, theiler=0):
    """``R[i, j] = 1`` iff ``|p_i - p_j| <= eps`` and ``|i - j| > theiler``."""
    if not eps > 0:
        raise ConfigError("eps must be positive")
    if theiler < 0:
        raise ConfigError("Theiler window must be non-negative")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return _recurrence(np.ascontiguousarray(pts), float(eps), int(theiler))


@njit(cache=True)
def _line_histograms(R, w):
    n = R.shape[0]
    diag = np.zeros(n + 1, dtype=np.int64)
    vert = np.zeros(n + 1, dtype=np.int64)
    total = 0
    # diagonals above and below the excluded band
    for k in range(w + 1, n):
        for sgn in (1, -1):
            run = 0
            for i in range(n - k):
                v = R[i, i + k] if sgn == 1 else R[i + k, i]
                if v:
                    run += 1
                    total += 1
                elif run:
                    diag[run] += 1
                    run = 0
            if run:
                diag[run] += 1
    for j in range(n):
        run = 0
        for i in range(n):
            if R[i, j] and abs(i - j) > w:
                run += 1
            elif run:
                vert[run] += 1
                run = 0
        if run:
            vert[run] += 1
    return diag, vert, total


def rqa_features(R, l_min=2, v_min=2, theiler=0):
    """Recurrence rate, determinism, laminarity, diagonal-line entropy (nats)
    and trapping time of a square binary matrix.

    Entries with ``|i - j| <= theiler`` are ignored. Ratios whose
    denominator is zero return the sentinel 0.
    """
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ShapeError(f"recurrence matrix must be square, got {R.shape}")
    n = R.shape[0]
    w = int(theiler)
    n_off = n * n - n - 2 * sum(n - k for k in range(1, min(w, n - 1) + 1)) if n > 0 else 0
    diag, vert, total = _line_histograms(np.ascontiguousarray(R != 0, dtype=np.uint8), w)
    lengths = np.arange(n + 1)
    rr = total / n_off if n_off > 0 else 0.0
    if total == 0:
        return RqaFeatures(rr, 0.0, 0.0, 0.0, 0.0)
    dl = diag[l_min:]
    det = float(np.sum(lengths[l_min:] * dl)) / total
    vl = vert[v_min:]
    lam = float(np.sum(lengths[v_min:] * vl)) / total
    n_lines = dl.sum()
    if n_lines > 0:
        p = dl[dl > 0] / n_lines
        entr = float(-np.sum(p * np.log(p)))
    else:
        entr = 0.0
    n_vert = vl.sum()
    tt = float(np.sum(lengths[v_min:] * vl) / n_vert) if n_vert > 0 else 0.0
    return RqaFeatures(float(rr), det, lam, abs(entr), tt)


def window_features(window, m=3, tau=None, eps_factor=0.2, l_min=2, v_min=2):
    """Declared defaults: delay from the autocorrelation minimum, radius
    ``eps_factor`` times the standard deviation of the embedded points, and
    a Theiler window of ``tau * m``."""
    x = np.asarray(window, dtype=float)
    tau = autocorr_delay(x) if tau is None else tau
    pts = embed(x, m, tau)
    sd = float(np.std(pts))
    if sd == 0.0:
        sd = 1.0
    R = recurrence_matrix(pts, eps_factor * sd, tau * m)
    return rqa_features(R, l_min, v_min, tau * m)
