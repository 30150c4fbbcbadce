import math
import time

import numpy as np
import pytest

from engine_testbench.errors import ShapeError, ConfigError, TrainingError
from engine_testbench.nn import (
    MlpParams, Grads, init_mlp, forward, gradient, mse_loss, flatten, unflatten,
    expected_param_count, sgd_update, adam_init, adam_update, TrainHyper, train_regression,
    save_model, load_model, normalize_outputs, denormalize_outputs, clip_grads,
)


def finite_difference(params, X, Y, h=1e-5):
    theta = flatten(params)
    fd = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        fd[i] = (mse_loss(unflatten(params, theta + e), X, Y) - mse_loss(unflatten(params, theta - e), X, Y)) / (2 * h)
    return fd


def max_rel_error(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-7)))


def test_zero_network():
    p = init_mlp([3, 4, 2], seed=0)
    p = p.with_layers([np.zeros_like(w) for w in p.weights], [np.zeros_like(b) for b in p.biases])
    np.testing.assert_array_equal(forward(p, [1.0, -2.0, 3.0]), np.zeros(2))


def test_identity_network():
    p = MlpParams((3, 3), (np.eye(3),), (np.zeros(3),))
    x = np.array([0.3, -1.5, 2.0])
    np.testing.assert_array_equal(forward(p, x), x)


def test_one_two_one_hand_evaluation():
    p = init_mlp([1, 2, 1], seed=42)
    (w1, w2), (b1, b2) = p.weights, p.biases
    rng = np.random.default_rng(7)
    p = p.with_layers([w1, w2], [rng.normal(size=2), rng.normal(size=1)])
    b1, b2 = p.biases
    x = 0.37
    by_hand = w2[0, 0] * math.tanh(w1[0, 0] * x + b1[0]) + w2[1, 0] * math.tanh(w1[0, 1] * x + b1[1]) + b2[0]
    assert forward(p, [x])[0] == pytest.approx(by_hand, abs=1e-15)


def test_forward_shape_errors():
    p = init_mlp([3, 4, 2], seed=0)
    with pytest.raises(ShapeError):
        forward(p, np.ones(4))
    with pytest.raises(ShapeError):
        MlpParams((3, 2), (np.ones((2, 3)),), (np.zeros(2),))
    with pytest.raises(ConfigError):
        MlpParams((3, 2), (np.ones((3, 2)),), (np.zeros(2),), hidden_activation="sigmoid")


def test_param_count():
    for sizes in ([3, 5, 2], [1, 1], [6, 64, 64, 64, 64, 1]):
        assert init_mlp(sizes).n_params == expected_param_count(sizes)
    assert expected_param_count([3, 5, 2]) == 4 * 5 + 6 * 2


def test_forward_is_pure_and_batched():
    p = init_mlp([4, 8, 3], seed=1)
    X = np.random.default_rng(0).normal(size=(5, 4))
    a = forward(p, X)
    np.testing.assert_array_equal(a, forward(p, X))
    np.testing.assert_allclose(a[2], forward(p, X[2]), rtol=0, atol=1e-15)


def test_gradient_3_5_2():
    rng = np.random.default_rng(3)
    p = init_mlp([3, 5, 2], seed=3)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    _, g = gradient(p, X, Y)
    assert max_rel_error(flatten(g), finite_difference(p, X, Y)) < 1e-4


ARCHS = [
    ([2, 3, 1], "tanh", "identity"), ([3, 5, 2], "tanh", "identity"), ([4, 6, 6, 3], "tanh", "tanh"),
    ([1, 4, 4, 4, 1], "tanh", "identity"), ([5, 3, 3, 3, 3, 2], "tanh", "identity"),
    ([3, 7, 2], "relu", "identity"), ([2, 5, 5, 1], "relu", "tanh"), ([6, 4, 4, 4, 4, 1], "relu", "identity"),
    ([3, 8, 8, 8, 2], "tanh", "tanh"), ([4, 2, 5, 3], "relu", "identity"),
]


@pytest.mark.parametrize("sizes, hidden, out", ARCHS)
def test_gradient_against_finite_differences(sizes, hidden, out):
    rng = np.random.default_rng(len(sizes) * 10 + sizes[0])
    p = init_mlp(sizes, seed=sizes[1], hidden_activation=hidden, output_activation=out,
                 input_norm=(rng.normal(size=sizes[0]), rng.uniform(0.5, 2, sizes[0])),
                 output_norm=(rng.normal(size=sizes[-1]), rng.uniform(0.5, 2, sizes[-1])))
    p = p.with_layers(p.weights, [rng.normal(scale=0.1, size=b.shape) for b in p.biases])
    X, Y = rng.normal(size=(6, sizes[0])), rng.normal(size=(6, sizes[-1]))
    _, g = gradient(p, X, Y)
    assert max_rel_error(flatten(g), finite_difference(p, X, Y)) < 1e-4


def test_gradient_zero_at_minimum():
    p = MlpParams((1, 1), (np.array([[2.0]]),), (np.array([0.5]),))
    X = np.array([[0.0], [1.0], [2.0]])
    _, g = gradient(p, X, 2.0 * X + 0.5)
    assert np.all(np.abs(flatten(g)) <= 1e-12)


def test_gradient_linear_in_residual():
    rng = np.random.default_rng(0)
    p = MlpParams((3, 2), (rng.normal(size=(3, 2)),), (rng.normal(size=2),))
    X = rng.normal(size=(5, 3))
    pred = forward(p, X)
    resid = rng.normal(size=pred.shape)
    _, g1 = gradient(p, X, pred - resid)
    _, g2 = gradient(p, X, pred - 2 * resid)
    np.testing.assert_allclose(flatten(g2), 2 * flatten(g1), rtol=1e-12, atol=1e-14)


def test_gradient_shape_error():
    p = init_mlp([3, 2])
    with pytest.raises(ShapeError):
        gradient(p, np.ones((4, 3)), np.ones((4, 3)))
    with pytest.raises(ShapeError):
        gradient(p, np.ones((0, 3)), np.ones((0, 2)))


def test_sgd_step():
    p = MlpParams((1, 1), (np.array([[1.0]]),), (np.array([0.0]),))
    g = Grads((np.array([[0.5]]),), (np.array([0.0]),))
    assert sgd_update(p, g, 0.1).weights[0][0, 0] == pytest.approx(0.95)
    with pytest.raises(ConfigError):
        sgd_update(p, g, 0.0)


def test_zero_gradient_leaves_params():
    p = init_mlp([3, 4, 2], seed=5)
    z = Grads(tuple(np.zeros_like(w) for w in p.weights), tuple(np.zeros_like(b) for b in p.biases))
    np.testing.assert_array_equal(flatten(sgd_update(p, z, 0.1)), flatten(p))
    q, _ = adam_update(p, z, adam_init(p), 0.1)
    np.testing.assert_array_equal(flatten(q), flatten(p))


@pytest.mark.parametrize("gval", [1e-3, 0.5, 250.0])
def test_adam_first_step_is_lr(gval):
    p = init_mlp([2, 3, 1], seed=0)
    g = Grads(tuple(np.full_like(w, gval) for w in p.weights), tuple(np.full_like(b, -gval) for b in p.biases))
    q, st = adam_update(p, g, adam_init(p), 0.01)
    step = flatten(q) - flatten(p)
    np.testing.assert_allclose(np.abs(step), 0.01, rtol=1e-4)
    assert st.t == 1


def test_clip_grads():
    g = Grads((np.array([[3.0]]),), (np.array([4.0]),))
    c = clip_grads(g, 1.0)
    assert np.hypot(c.weights[0][0, 0], c.biases[0][0]) == pytest.approx(1.0)
    assert clip_grads(g, 10.0) is g


def test_linear_regression_fits():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(500, 3))
    Y = X @ np.array([2.0, -1.0, 0.5]) + 10.0
    p, rep = train_regression(X, Y, hidden=(), hyper=TrainHyper(epochs=200, lr=1e-2, seed=1))
    assert rep.holdout_mpe < 0.1
    assert rep.train_loss >= 0 and rep.val_loss >= 0


def test_training_deterministic():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, size=(200, 2))
    Y = np.sin(X[:, 0]) + X[:, 1] ** 2 + 2.0
    hyper = TrainHyper(epochs=5, seed=3)
    (p1, r1), (p2, r2) = train_regression(X, Y, (8,), hyper), train_regression(X, Y, (8,), hyper)
    assert r1 == r2
    np.testing.assert_array_equal(flatten(p1), flatten(p2))


def test_training_errors():
    with pytest.raises(TrainingError):
        train_regression(np.ones((5, 2)), np.ones(5))
    with pytest.raises(TrainingError):
        train_regression(np.ones((20, 2)), np.full(20, np.nan), hyper=TrainHyper(epochs=1))
    with pytest.raises(ConfigError):
        train_regression(np.ones((20, 2)), np.ones(20), hyper=TrainHyper(epochs=1, val_split=1.0))


def test_output_normalization_inverse():
    p = init_mlp([2, 3], output_norm=(np.array([1.0, -2.0, 5.0]), np.array([2.0, 0.5, 10.0])))
    y = np.random.default_rng(0).normal(size=(4, 3))
    np.testing.assert_allclose(denormalize_outputs(p, normalize_outputs(p, y)), y, rtol=1e-12, atol=1e-12)


def test_model_file_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    p = init_mlp([3, 5, 5, 2], seed=9, hidden_activation="relu", output_activation="tanh",
                 input_norm=(rng.normal(size=3), rng.uniform(1, 2, 3)), output_norm=(rng.normal(size=2), rng.uniform(1, 2, 2)))
    path = tmp_path / "m.json"
    save_model(p, path, {"note": "x"})
    q, meta = load_model(path)
    assert meta == {"note": "x"}
    np.testing.assert_array_equal(flatten(q), flatten(p))
    np.testing.assert_array_equal(q.input_scale, p.input_scale)
    assert (q.hidden_activation, q.output_activation) == ("relu", "tanh")
    x = rng.normal(size=3)
    np.testing.assert_array_equal(forward(q, x), forward(p, x))
    save_model(q, tmp_path / "m2.json", {"note": "x"})
    assert (tmp_path / "m2.json").read_bytes() == path.read_bytes()


def test_model_file_rejects_other_documents(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format": "other"}')
    with pytest.raises(ConfigError):
        load_model(path)
    with pytest.raises(ConfigError):
        load_model(tmp_path / "missing.json")


def test_inference_latency_4x64():
    p = init_mlp([18, 64, 64, 64, 64, 3], seed=0, output_activation="tanh")
    x = np.random.default_rng(0).normal(size=18)
    forward(p, x)
    n = 2000
    t0 = time.perf_counter()
    for _ in range(n):
        forward(p, x)
    assert (time.perf_counter() - t0) / n < 1e-3
