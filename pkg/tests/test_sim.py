import math

import numpy as np
import pytest

from engine_testbench.errors import ConfigError, SteadyStateError
from engine_testbench.sim import (
    EngineConfig, EngineState, Simulator, P_AMB, valve_step, valve_flow, pump_head, turbine_torque,
    mixture_ratio, derivatives, auxiliaries, rk4_step, steady_state, balance_residuals,
    state_scales, observe, normalize, denormalize, Reference, read_trajectory, write_trajectory,
    TRAJECTORY_HEADER,
)
from engine_testbench.sim.trajectory import trajectory_row


# -- components ---------------------------------------------------------------

@pytest.mark.parametrize("u, cmd, tau, dt, expected", [
    (0.0, 1.0, 0.1, 0.1, 1 - math.exp(-1)),
    (0.5, 0.5, 0.1, 0.05, 0.5),
    (0.0, 1.0, 0.1, 0.2, 1 - math.exp(-2)),
])
def test_valve_step_matches_exponential(u, cmd, tau, dt, expected):
    assert valve_step(u, cmd, tau, dt) == pytest.approx(expected, abs=1e-9)


def test_valve_step_published_values():
    assert round(valve_step(0.0, 1.0, 0.1, 0.1), 6) == 0.632121
    assert round(valve_step(0.0, 1.0, 0.1, 0.2), 6) == 0.864665


def test_valve_step_monotone_and_converges(rng):
    for _ in range(50):
        u, cmd = sorted(rng.uniform(0, 1, 2))
        tau = rng.uniform(0.01, 0.5)
        dt = tau / 10
        nxt = valve_step(u, cmd, tau, dt)
        assert u < nxt <= cmd
        x = u
        for _ in range(500):  # 50 time constants
            x = valve_step(x, cmd, tau, dt)
        assert abs(x - cmd) < 1e-9


def test_valve_step_rejects_bad_time_constant():
    with pytest.raises(ConfigError):
        valve_step(0.0, 1.0, 0.0, 0.1)


def test_valve_flow():
    assert valve_flow(0.0, 2e-4, 1000.0, 1e6) == 0.0
    assert valve_flow(1.0, 2e-4, 1000.0, 0.0) == 0.0
    assert valve_flow(1.0, 2e-4, 1000.0, 1e6) == pytest.approx(2e-4 * math.sqrt(2e9))
    assert round(valve_flow(1.0, 2e-4, 1000.0, 1e6), 3) == 8.944


def test_pump_head():
    assert pump_head(0.0, 0.0, 1e-2, 1.0, 1000.0) == 0.0
    assert pump_head(1000.0, 0.0, 1e-2, 1.0, 1000.0) == pytest.approx(1e7)
    assert pump_head(100.0, 50.0, 1e-2, 1.0, 1000.0) == 0.0


def test_turbine_torque():
    assert turbine_torque(0.0, 4e5, 0.5, 2000.0) == 0.0
    assert turbine_torque(1.0, 4e5, 0.5, 2000.0) == pytest.approx(100.0)
    ratio = turbine_torque(2.0, 3e5, 0.8, 1500.0) / turbine_torque(2.0, 3e5, 1.0, 1500.0)
    assert ratio == pytest.approx(0.8, rel=1e-15)


def test_mixture_ratio():
    assert mixture_ratio(10.0, 2.0) == 5.0
    assert mixture_ratio(10.0, 0.0) == 0.0
    assert mixture_ratio(10.0, 5e-7) == 0.0


# -- model -----------------------------------------------------------------

@pytest.mark.parametrize("name", ["gg", "eb"])
def test_rest_is_fixed_point(name, request):
    cfg = request.getfixturevalue(name)
    d = derivatives(EngineState.rest(), cfg, np.zeros(5), t=cfg.t_start + 1.0)
    assert np.all(d == 0.0)


def test_starter_only(gg):
    d = derivatives(EngineState.rest(), gg, np.zeros(5), t=0.0)
    expected = np.zeros(9)
    expected[2] = gg.tau_start / gg.J_H
    np.testing.assert_allclose(d, expected, rtol=1e-14, atol=0)


def test_rk4_scalar():
    x1 = rk4_step(np.array([1.0]), lambda x, t: -x, 0.1)
    assert x1[0] == pytest.approx(0.9048375, abs=1e-7)
    assert abs(x1[0] - math.exp(-0.1)) < 1e-7


def test_rk4_order():
    def global_error(dt):
        x = np.array([1.0])
        for k in range(int(round(1.0 / dt))):
            x = rk4_step(x, lambda y, t: -y, dt, t=k * dt)
        return abs(x[0] - math.exp(-1.0))
    ratio = global_error(0.1) / global_error(0.05)
    assert 14.0 <= ratio <= 18.0


def test_rk4_zero_rhs():
    x = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(rk4_step(x, lambda y, t: np.zeros_like(y), 0.1), x)


def test_rk4_rejects_nonpositive_step():
    with pytest.raises(ConfigError):
        rk4_step(np.ones(1), lambda y, t: -y, 0.0)


@pytest.mark.parametrize("name, valves", [
    ("gg", [0.6, 0.6, 0.6]), ("gg", [0.9, 0.5, 0.4]), ("gg", [1.0, 1.0, 1.0]),
    ("eb", [0.6, 0.6, 0.6]), ("eb", [0.4, 0.8, 0.5]), ("eb", [0.9, 0.6, 0.7]),
])
def test_steady_state_balances(name, valves, request):
    cfg = request.getfixturevalue(name)
    st = steady_state(cfg, valves)
    assert st.p_cc > 2 * P_AMB
    d = derivatives(st, cfg, cfg.full_command(valves), t=1e9)
    assert np.max(np.abs(d[:4]) / state_scales(cfg)) < 1e-8
    for key, value in balance_residuals(st, cfg).items():
        assert value < 1e-6, key


def test_steady_state_closed_valves_is_degenerate(gg):
    with pytest.raises(SteadyStateError):
        steady_state(gg, [0.0, 0.0, 0.0])


def test_degradation_never_raises_pressure(gg, rng):
    for _ in range(10):
        valves = rng.uniform(0.3, 1.0, 3).tolist()
        p = [steady_state(gg.with_turbine_efficiency(eta), valves).p_cc for eta in (1.0, 0.95, 0.9, 0.85)]
        assert all(b <= a for a, b in zip(p, p[1:])), (valves, p)


def test_simulation_is_deterministic(gg):
    def run():
        sim = Simulator(gg)
        out = []
        for k in range(60):
            out.append(sim.advance([0.6, 0.6, 0.6] if k > 3 else [0.2, 0.1, 0.3]).copy())
        return np.array(out)
    np.testing.assert_array_equal(run(), run())


def test_valves_clamped(gg):
    sim = Simulator(gg)
    for _ in range(40):
        x = sim.advance([1.0, 1.0, 1.0])
        assert np.all(x[4:] >= 0) and np.all(x[4:] <= 1)
        assert np.all(x[:2] >= P_AMB) and np.all(x[2:4] >= 0)


def test_startup_reaches_steady_state(gg):
    sim = Simulator(gg)
    for _ in range(200):
        sim.advance([0.6, 0.6, 0.6])
    ss = steady_state(gg, [0.6, 0.6, 0.6])
    assert sim.state.p_cc == pytest.approx(ss.p_cc, rel=1e-4)


# -- observation ---------------------------------------------------------------

def test_observation_mixture_ratios(gg):
    st = steady_state(gg, [0.6, 0.6, 0.6])
    a = auxiliaries(st, gg)
    obs = observe(st, gg, Reference(100e5, 0.9, 5.0))
    assert obs.mr_gg == pytest.approx(a["mdot_3"] / a["mdot_2"])
    assert obs.mr_glob == pytest.approx((a["mdot_1"] + a["mdot_3"]) / (a["mdot_0"] + a["mdot_2"]))


def test_observation_at_rest_uses_sentinel(gg):
    obs = observe(EngineState.rest(), gg, Reference(100e5, 0.9, 5.0))
    assert obs.mr_gg == 0.0 and obs.mr_glob == 0.0


def test_normalization_round_trip(gg):
    st = steady_state(gg, [0.7, 0.5, 0.6])
    obs = observe(st, gg, Reference(100e5, 0.9, 5.0))
    back = denormalize(normalize(obs, gg), gg)
    np.testing.assert_allclose(back.raw(), obs.raw(), rtol=1e-12, atol=0)


# -- configuration and files ---------------------------------------------------

@pytest.mark.parametrize("name", ["gg", "eb"])
def test_config_json_round_trip(name, request, tmp_path):
    cfg = request.getfixturevalue(name)
    path = tmp_path / "cfg.json"
    cfg.to_json(path)
    back = EngineConfig.from_json(path)
    assert back == cfg
    assert back.to_json() == cfg.to_json()


def test_config_validation(gg):
    data = gg.to_dict()
    data["V_cc"] = 0.0
    with pytest.raises(ConfigError):
        EngineConfig.from_dict(data)
    data = gg.to_dict()
    data["eta_tH"] = 1.2
    with pytest.raises(ConfigError):
        EngineConfig.from_dict(data)
    with pytest.raises(ConfigError):
        EngineConfig.from_json(str(gg.to_dict()))


def test_trajectory_csv(gg, tmp_path):
    obs = observe(steady_state(gg, [0.6, 0.6, 0.6]), gg, Reference(100e5, 0.9, 5.0))
    rows = [trajectory_row(0.05 * k, obs, [0.6, 0.6, 0.6], -0.5) for k in range(3)]
    path = tmp_path / "traj.csv"
    write_trajectory(path, rows)
    assert path.read_text().splitlines()[0] == ",".join(TRAJECTORY_HEADER)
    back = read_trajectory(path)
    assert [r["t"] for r in back] == [0.0, 0.05, 0.1]
    assert back[1]["p_cc"] == obs.p_cc
