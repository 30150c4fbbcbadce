"""Learned surrogates of closed-form oracles with extrapolation guarding."""

from .oracles import (
    OracleSpec, ORACLES, WALL_TEMP, FATIGUE_LIFE, oracle, oracle_wall_temp, oracle_fatigue_life,
    heat_transfer_coeff,
)
from .dataset import Dataset, gen_dataset, latin_hypercube, format_dataset, read_dataset
from .fit import (
    GuardedPrediction, fit_surrogate, predict_guarded, range_flags, point_latency, default_hyper,
    beyond_box, extrapolation_mae,
)
