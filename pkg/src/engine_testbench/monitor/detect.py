"""Lead-time labeling of signal windows and detector evaluation."""

import csv
import dataclasses
import io
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError, ConfigError
from .rqa import window_features
from .signal import SignalConfig, gen_signal
from .svm import svm_predict

FEATURE_NAMES = ("rr", "det", "lam", "entr", "tt")
WINDOW = 1024
HORIZON = 0.3


@dataclass
class LabeledWindows:
    t_end: np.ndarray   # window end times, s
    X: np.ndarray       # (n, 5) RQA features
    y: np.ndarray       # +1 / -1
    onset: float


def label_windows(x, onset_time, sample_rate=10_000.0, window=WINDOW, horizon=HORIZON, stride=None):
    """RQA features of sliding windows with lead-time labels.

    A window ending at ``t_e`` is +1 if ``0 < onset - t_e <= horizon`` and
    -1 if ``onset - t_e > horizon``; windows ending at or after the onset
    are dropped. ``stride`` defaults to the window length.
    """
    x = np.asarray(x, dtype=float)
    stride = window if stride is None else int(stride)
    if window > x.size:
        raise ShapeError(f"window of {window} samples exceeds series length {x.size}")
    ends, feats, labels = [], [], []
    for k in range(window, x.size + 1, stride):
        t_e = k / sample_rate
        lead = onset_time - t_e
        if lead <= 0:
            break
        ends.append(t_e)
        feats.append(window_features(x[k - window:k]).vector())
        labels.append(1 if lead <= horizon else -1)
    X = np.array(feats).reshape(-1, len(FEATURE_NAMES))
    return LabeledWindows(np.array(ends), X, np.array(labels, dtype=int), onset_time)


def run_alarms(model, run):
    if run.X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    return svm_predict(model, run.X)[1]


def evaluate_detector(model, runs, horizon=HORIZON):
    """Window-level precision, run-level recall, false alarms per run and
    median lead time.

    A run with an onset counts as detected when at least one alarm falls
    inside the horizon. A false alarm is an alarm on a window whose onset is
    more than ``horizon`` ahead or absent. Lead time is measured from the
    end of the first alarmed window of a run to its onset.
    """
    tp = fp = 0
    detected = with_onset = 0
    leads = []
    for run in runs:
        pred = run_alarms(model, run)
        alarm = pred == 1
        pos = run.y == 1
        tp += int(np.sum(alarm & pos))
        fp += int(np.sum(alarm & ~pos))
        if math.isfinite(run.onset):
            with_onset += 1
            detected += int(np.any(alarm & pos))
            if np.any(alarm):
                leads.append(run.onset - run.t_end[np.argmax(alarm)])
    n = max(len(runs), 1)
    return {
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": detected / with_onset if with_onset else 0.0,
        "false_alarms_per_run": fp / n,
        "median_lead_time": float(np.median(leads)) if leads else None,
        "runs": len(runs),
        "runs_with_onset": with_onset,
    }


def simulate_runs(n, seed, base=None, onset_jitter=0.5, no_onset=False):
    """``n`` signal runs with seeded noise and a random shift of the ramp
    (uniform in ``[0, onset_jitter]`` s) so onsets do not line up.

    With ``no_onset`` the ramp stops at a quarter of its start value and
    never crosses zero.
    """
    base = base or SignalConfig()
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(n):
        shift = float(rng.uniform(0.0, onset_jitter)) if onset_jitter > 0 else 0.0
        cfg = dataclasses.replace(
            base, ramp_start=base.ramp_start + shift, ramp_end=base.ramp_end + shift,
            duration=base.duration + onset_jitter, seed=int(rng.integers(0, 2**63 - 1)),
        )
        if no_onset:
            cfg = dataclasses.replace(cfg, mu_end=0.25 * cfg.mu_start)
        runs.append(cfg)
    return runs


def labeled_runs(configs, window=WINDOW, horizon=HORIZON, stride=None):
    out = []
    for cfg in configs:
        _, x, onset = gen_signal(cfg)
        out.append(label_windows(x, onset, cfg.sample_rate, window, horizon, stride))
    return out


def stack(runs):
    X = np.vstack([r.X for r in runs]) if runs else np.zeros((0, len(FEATURE_NAMES)))
    y = np.concatenate([r.y for r in runs]) if runs else np.zeros(0, dtype=int)
    return X, y


LABELED_HEADER = ("run", "t_end", "onset") + FEATURE_NAMES + ("label",)


def format_labeled(runs):
    """CSV of labeled windows, one row per window; ``run`` groups windows
    and ``onset`` is ``inf`` for runs without an instability."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LABELED_HEADER)
    for k, run in enumerate(runs):
        for t_e, row, label in zip(run.t_end, run.X, run.y):
            w.writerow([k, repr(float(t_e)), repr(float(run.onset))] + [repr(float(v)) for v in row] + [int(label)])
    return buf.getvalue()


def read_labeled(path):
    """Inverse of :func:`format_labeled`; returns a list of runs."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            rows = [r for r in reader if r]
    except OSError as exc:
        raise ConfigError(f"cannot read labeled dataset {path}: {exc}") from exc
    if header != LABELED_HEADER:
        raise ConfigError(f"unexpected labeled-dataset header {header}")
    groups = {}
    for r in rows:
        groups.setdefault(int(r[0]), []).append(r)
    runs = []
    for k in sorted(groups):
        g = groups[k]
        runs.append(LabeledWindows(
            np.array([float(r[1]) for r in g]),
            np.array([[float(v) for v in r[3:8]] for r in g]).reshape(-1, len(FEATURE_NAMES)),
            np.array([int(r[8]) for r in g], dtype=int),
            float(g[0][2]),
        ))
    return runs
