"""Closed-form stand-ins for expensive thermal and structural analyses."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, RangeError, ShapeError


@dataclass(frozen=True)
class OracleSpec:
    preset: str
    names: tuple
    lower: tuple
    upper: tuple

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ConfigError("names, lower and upper must have equal length")
        for n, lo, hi in zip(self.names, self.lower, self.upper):
            if not lo < hi:
                raise ConfigError(f"range of {n} must satisfy min < max, got [{lo}, {hi}]")

    @property
    def dim(self):
        return len(self.names)

    def __call__(self, x, strict=True):
        return ORACLE_FUNCS[self.preset](x, strict)


def _check(x, spec, strict):
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.dim,):
        raise ShapeError(f"{spec.preset} expects a {spec.dim}-vector, got shape {x.shape}")
    if strict:
        for v, n, lo, hi in zip(x, spec.names, spec.lower, spec.upper):
            if not lo <= v <= hi:
                raise RangeError(f"{n}={v} outside [{lo}, {hi}]")
    return x


def heat_transfer_coeff(G, d_h, T_c):
    """Coolant-side coefficient in W/(m^2 K); ``G`` kg/(m^2 s), ``d_h`` mm, ``T_c`` K."""
    return 2000.0 * (G / 10000.0) ** 0.8 * (d_h / 2.0) ** -0.2 * (1.0 + 0.3 * math.tanh((T_c - 200.0) / 50.0))


def oracle_wall_temp(x, strict=True):
    """Maximum wall temperature in K for ``(q MW/m^2, G, d_h mm, T_c K, t_w mm, k_w W/(m K))``.

    ``strict=False`` skips the range check (used to probe extrapolation).
    """
    q, G, d_h, T_c, t_w, k_w = _check(x, WALL_TEMP, strict)
    flux = q * 1e6
    return float(T_c + flux / heat_transfer_coeff(G, d_h, T_c) + flux * (t_w * 1e-3) / k_w)


def oracle_fatigue_life(x, strict=True):
    """Cycles to failure for hot-gas wall ``T_h`` and outer shell ``T_o`` (K)."""
    T_h, T_o = _check(x, FATIGUE_LIFE, strict)
    return float(4000.0 * math.exp(-(T_h - 700.0) / 120.0) * (1.0 + (T_o - 300.0) / 600.0))


WALL_TEMP = OracleSpec(
    "wall_temp", ("q", "G", "d_h", "T_c", "t_w", "k_w"),
    (5.0, 2000.0, 1.0, 120.0, 0.5, 250.0), (80.0, 20000.0, 4.0, 300.0, 2.0, 400.0),
)
FATIGUE_LIFE = OracleSpec("fatigue_life", ("T_h", "T_o"), (700.0, 300.0), (1000.0, 600.0))
ORACLES = {"wall_temp": WALL_TEMP, "fatigue_life": FATIGUE_LIFE}
ORACLE_FUNCS = {"wall_temp": oracle_wall_temp, "fatigue_life": oracle_fatigue_life}


def oracle(preset):
    try:
        return ORACLES[preset]
    except KeyError:
        raise ConfigError(f"unknown oracle preset {preset!r}; choose from {sorted(ORACLES)}") from None
