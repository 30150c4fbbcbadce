import math

import numpy as np
import pytest

from engine_testbench.errors import RangeError, ShapeError, ConfigError
from engine_testbench.nn import TrainHyper
from engine_testbench.surrogate import (
    WALL_TEMP, FATIGUE_LIFE, OracleSpec, oracle, oracle_wall_temp, oracle_fatigue_life,
    gen_dataset, latin_hypercube, format_dataset, read_dataset, fit_surrogate, predict_guarded,
    range_flags, beyond_box, extrapolation_mae,
)


def test_wall_temp_hand_value():
    # h_c = 2000 at the reference point, so T = 200 + 2e7/2000 + 2e7*1e-3/350
    assert oracle_wall_temp([20, 10000, 2, 200, 1, 350]) == pytest.approx(200 + 10000 + 20000 / 350, rel=1e-14)
    assert oracle_wall_temp([20, 10000, 2, 200, 1, 350]) == pytest.approx(10257.142857142857, rel=1e-14)


def test_wall_temp_limits_and_scaling():
    x = np.array([20, 5000, 2, 200, 1, 350.0])
    # q -> 0 leaves only the coolant temperature
    assert WALL_TEMP([1e-9, *x[1:]], strict=False) == pytest.approx(200.0, abs=1e-5)
    conduction = 2e7 * 1e-3 / 350

    def convective(G):
        return oracle_wall_temp([20, G, 2, 200, 1, 350]) - 200 - conduction

    assert convective(10000) / convective(5000) == pytest.approx(2 ** -0.8, rel=1e-12)


def test_fatigue_values_and_monotonicity():
    assert oracle_fatigue_life([700, 300]) == 4000.0
    assert oracle_fatigue_life([820, 300]) == pytest.approx(4000 * math.exp(-1), rel=1e-14)
    assert oracle_fatigue_life([820, 300]) == pytest.approx(1471.5, abs=0.05)
    th = np.linspace(700, 1000, 50)
    vals = [oracle_fatigue_life([t, 450]) for t in th]
    assert np.all(np.diff(vals) < 0)


def test_oracle_range_errors():
    with pytest.raises(RangeError):
        oracle_wall_temp([100, 10000, 2, 200, 1, 350])
    with pytest.raises(RangeError):
        oracle_fatigue_life([650, 300])
    with pytest.raises(ShapeError):
        oracle_fatigue_life([700, 300, 1])
    with pytest.raises(ConfigError):
        OracleSpec("bad", ("a",), (1.0,), (1.0,))
    with pytest.raises(ConfigError):
        oracle("nope")


def test_oracles_pure():
    x = [33.3, 7777, 1.7, 150, 1.2, 300]
    vals = {oracle_wall_temp(x) for _ in range(1000)}
    assert len(vals) == 1


def _check_strata(X, lo, hi):
    n = X.shape[0]
    idx = np.floor((X - lo) / (hi - lo) * n).astype(int)
    for j in range(X.shape[1]):
        assert sorted(idx[:, j]) == list(range(n))


def test_lhs_stratification():
    lo, hi = np.array(WALL_TEMP.lower), np.array(WALL_TEMP.upper)
    for n in list(range(1, 60)) + [1000, 10_000]:
        X = latin_hypercube(n, lo, hi, np.random.default_rng(n))
        assert np.all(X >= lo) and np.all(X <= hi)
        _check_strata(X, lo, hi)


def test_gen_dataset_single_and_deterministic():
    d1 = gen_dataset("fatigue_life", 1, seed=3)
    assert len(d1) == 1
    assert np.all(d1.X >= FATIGUE_LIFE.lower) and np.all(d1.X <= FATIGUE_LIFE.upper)
    a, b = gen_dataset(WALL_TEMP, 50, 4), gen_dataset(WALL_TEMP, 50, 4)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
    np.testing.assert_array_equal(a.x_min, a.X.min(axis=0))
    np.testing.assert_array_equal(a.x_max, a.X.max(axis=0))
    with pytest.raises(ConfigError):
        gen_dataset(WALL_TEMP, 0)


def test_dataset_csv_roundtrip(tmp_path):
    ds = gen_dataset("wall_temp", 20, 1)
    p = tmp_path / "d.csv"
    p.write_text(format_dataset(ds))
    back = read_dataset(p)
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.y, ds.y)
    assert (back.preset, back.seed, back.names) == (ds.preset, ds.seed, ds.names)


@pytest.fixture(scope="module")
def small_model():
    ds = gen_dataset("fatigue_life", 2000, 0)
    params, report = fit_surrogate(ds, hidden=(32, 32), hyper=TrainHyper(epochs=30, lr=3e-3, seed=0))
    return ds, params, report


def test_fit_surrogate_report(small_model):
    ds, params, report = small_model
    assert report["holdout_mpe"] < 5.0
    assert report["latency_s"] < 1e-3
    assert {"holdout_mae", "train_loss", "val_loss"} <= set(report)


def test_guard_flags(small_model):
    ds, params, _ = small_model
    lo, hi = ds.x_min, ds.x_max
    inside = predict_guarded(params, lo, hi, 0.5 * (lo + hi))
    assert not inside.extrapolating and not inside.flags.any()
    above = predict_guarded(params, lo, hi, np.array([hi[0] + 1.0, 0.5 * (lo[1] + hi[1])]))
    assert list(above.flags) == [True, False] and above.extrapolating
    at_edge = predict_guarded(params, lo, hi, hi.copy())
    assert not at_edge.extrapolating
    assert not predict_guarded(params, lo, hi, lo.copy()).extrapolating
    with pytest.raises(ShapeError):
        predict_guarded(params, lo, hi, np.zeros(3))


def test_guard_flags_monotone():
    lo, hi = np.zeros(3), np.ones(3)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x = rng.uniform(-1, 2, 3)
        f = range_flags(lo, hi, x)
        j = rng.integers(3)
        y = x.copy()
        y[j] = x[j] + (1.0 if x[j] > 1 else -1.0) * rng.uniform(0, 1) if f[j] else x[j]
        assert np.all(range_flags(lo, hi, y)[f])


def test_beyond_box_is_outside():
    X = beyond_box(WALL_TEMP, 500, 0.2, seed=1)
    flags = (X < np.array(WALL_TEMP.lower)) | (X > np.array(WALL_TEMP.upper))
    assert np.all(flags.sum(axis=1) == 1)


def test_error_grows_outside_training_box(small_model):
    ds, params, report = small_model
    assert extrapolation_mae(params, FATIGUE_LIFE, n=2000, frac=0.2, seed=0) > report["holdout_mae"]
    wt = gen_dataset("wall_temp", 2000, 0)
    p2, r2 = fit_surrogate(wt, hidden=(32, 32), hyper=TrainHyper(epochs=30, lr=3e-3, seed=0))
    assert extrapolation_mae(p2, WALL_TEMP, n=2000, frac=0.2, seed=0) > r2["holdout_mae"]
