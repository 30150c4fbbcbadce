"""Nine-state lumped cycle model: right-hand side, integration, steady state.

State vector layout (``STATE_NAMES``)::

    p_cc, p_gg, omega_h, omega_o, u_0 .. u_4

``p_gg`` is the gas-generator pressure (GG preset) or the turbine-inlet
manifold pressure (expander-bleed preset). The right-hand side is compiled
with numba; the packed parameter vector is produced by :func:`pack`.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..errors import ConfigError, NumericalFault, SteadyStateError
from . import components as comp
from .config import N_VALVES, EngineConfig

DT_PHYSICS = 1.0e-3
CONTROL_DT = 0.05

STATE_NAMES = ("p_cc", "p_gg", "omega_h", "omega_o", "u_0", "u_1", "u_2", "u_3", "u_4")
N_STATE = 4 + N_VALVES
IX_VALVES = slice(4, 4 + N_VALVES)

_valve_flow = njit(cache=True)(comp.valve_flow)
_pump_head = njit(cache=True)(comp.pump_head)
_turbine_torque = njit(cache=True)(comp.turbine_torque)
_mixture_ratio = njit(cache=True)(comp.mixture_ratio)
_cstar_fit = njit(cache=True)(comp.cstar_fit)
_temperature_fit = njit(cache=True)(comp.temperature_fit)
_pump_outlet = njit(cache=True)(comp.pump_outlet_pressure)

P_AMB = comp.P_AMB
OMEGA_FLOOR = comp.OMEGA_FLOOR

# packed parameter indices
(K_KIND, K_VGG, K_VCC, K_JH, K_JO, K_AH, K_CH, K_AO, K_CO, K_ETAPH, K_ETAPO,
 K_RHOF, K_RHOO, K_PTF, K_PTO, K_DHT, K_ETATH, K_ETATO, K_AT,
 K_C0, K_C1, K_C2, K_CLO, K_CHI, K_T0, K_T1, K_TLO, K_THI,
 K_RGG, K_GAMMA, K_TAUS, K_TS, K_ATH, K_TREF, K_PREF) = range(35)
K_TAU = 35
K_CDA = K_TAU + N_VALVES
K_RHOV = K_CDA + N_VALVES
N_PARAM = K_RHOV + N_VALVES

# auxiliary quantities computed alongside the derivative
(A_PF, A_PO, A_M0, A_M1, A_M2, A_M3, A_M4, A_MTH, A_MTO, A_MNOZ, A_THOT, A_CSTAR,
 A_PWR_TH, A_PWR_PH, A_PWR_TO, A_PWR_PO, A_MR_HOT, A_MR_CC, A_MR_GLOB,
 A_IN_CC, A_OUT_CC, A_IN_HOT, A_OUT_HOT) = range(23)
N_AUX = 23

AUX_NAMES = (
    "p_pump_fuel", "p_pump_ox", "mdot_0", "mdot_1", "mdot_2", "mdot_3", "mdot_4",
    "mdot_turbine_h", "mdot_turbine_o", "mdot_nozzle", "T_hot", "cstar",
    "power_turbine_h", "power_pump_h", "power_turbine_o", "power_pump_o",
    "mr_hot", "mr_cc", "mr_glob", "in_cc", "out_cc", "in_hot", "out_hot",
)


def vandenkerckhove(gamma):
    return math.sqrt(gamma) * (2.0 / (gamma + 1.0)) ** ((gamma + 1.0) / (2.0 * (gamma - 1.0)))


def pack(cfg: EngineConfig):
    """Flatten a config into the parameter vector used by the kernel."""
    p = np.zeros(N_PARAM)
    p[K_KIND] = 0.0 if cfg.cycle_kind == "gas_generator" else 1.0
    p[K_VGG], p[K_VCC], p[K_JH], p[K_JO] = cfg.V_gg, cfg.V_cc, cfg.J_H, cfg.J_O
    p[K_AH], p[K_AO] = cfg.a_p
    p[K_CH], p[K_CO] = cfg.c_p
    p[K_ETAPH], p[K_ETAPO] = cfg.eta_p
    p[K_RHOF], p[K_RHOO] = cfg.rho_p
    p[K_PTF], p[K_PTO] = cfg.p_tank
    p[K_DHT], p[K_ETATH], p[K_ETATO], p[K_AT] = cfg.dh_t, cfg.eta_tH, cfg.eta_tO, cfg.A_t
    p[K_C0], p[K_C1], p[K_C2] = cfg.cstar_fit.coeffs
    p[K_CLO], p[K_CHI] = cfg.cstar_fit.mr_range
    p[K_T0], p[K_T1] = cfg.T_gg_fit.coeffs
    p[K_TLO], p[K_THI] = cfg.T_gg_fit.mr_range
    p[K_RGG] = cfg.R_gg
    p[K_GAMMA] = vandenkerckhove(cfg.gamma_cc)
    p[K_TAUS], p[K_TS] = cfg.tau_start, cfg.t_start
    p[K_ATH], p[K_TREF], p[K_PREF] = cfg.A_turb_H, cfg.T_ref, cfg.p_ref
    for i, v in enumerate(cfg.valves):
        p[K_TAU + i] = v.tau_v
        p[K_CDA + i] = v.C_dA
        p[K_RHOV + i] = 0.0 if v.rho is None else v.rho
    return p


@njit(cache=True)
def _gas_flow(u, cda, p_up, rt):
    # orifice law with the upstream ideal-gas density
    return _valve_flow(u, cda, p_up / rt, p_up - P_AMB)


@njit(cache=True)
def _evaluate(x, cmd, prm, t, dx, aux):
    """Fill ``dx`` with the state derivative and ``aux`` with flows/powers."""
    p_cc = x[0]
    p_hot = x[1]
    w_h = x[2]
    w_o = x[3]
    u = x[4:4 + N_VALVES]
    expander = prm[K_KIND] > 0.5
    rho_f = prm[K_RHOF]
    rho_o = prm[K_RHOO]

    k0 = max(u[0], 0.0) * prm[K_CDA + 0] * math.sqrt(2.0 * prm[K_RHOV + 0])
    k1 = max(u[1], 0.0) * prm[K_CDA + 1] * math.sqrt(2.0 * prm[K_RHOV + 1])
    k2 = max(u[2], 0.0) * prm[K_CDA + 2] * math.sqrt(2.0 * prm[K_RHOV + 2])

    # fuel pump feeds the chamber (slot 0) and the hot branch (slot 2)
    pf = _pump_outlet(prm[K_PTF], w_h, prm[K_AH], prm[K_CH], rho_f, k0, p_cc, k2, p_hot)
    m0 = _valve_flow(u[0], prm[K_CDA + 0], prm[K_RHOV + 0], pf - p_cc)
    m2 = _valve_flow(u[2], prm[K_CDA + 2], prm[K_RHOV + 2], pf - p_hot)

    if expander:
        po = _pump_outlet(prm[K_PTO], w_o, prm[K_AO], prm[K_CO], rho_o, k1, p_cc, 0.0, p_cc)
        m1 = _valve_flow(u[1], prm[K_CDA + 1], prm[K_RHOV + 1], po - p_cc)
        m3 = 0.0
        mr_hot = 0.0
        t_hot = _temperature_fit(0.0, prm[K_T0], prm[K_T1], prm[K_TLO], prm[K_THI])
        rt_hot = prm[K_RGG] * t_hot
        m_th = _gas_flow(u[3], prm[K_CDA + 3], p_hot, rt_hot)
        m_to = _gas_flow(u[4], prm[K_CDA + 4], p_hot, rt_hot)
        m4 = m_to
        dh = prm[K_DHT] * (max(p_cc, P_AMB) / prm[K_PREF]) ** 0.8
        in_hot = m2
        fuel_total = m0 + m2
        ox_total = m1
    else:
        k3 = max(u[3], 0.0) * prm[K_CDA + 3] * math.sqrt(2.0 * prm[K_RHOV + 3])
        po = _pump_outlet(prm[K_PTO], w_o, prm[K_AO], prm[K_CO], rho_o, k1, p_cc, k3, p_hot)
        m1 = _valve_flow(u[1], prm[K_CDA + 1], prm[K_RHOV + 1], po - p_cc)
        m3 = _valve_flow(u[3], prm[K_CDA + 3], prm[K_RHOV + 3], po - p_hot)
        mr_hot = _mixture_ratio(m3, m2)
        t_hot = _temperature_fit(mr_hot, prm[K_T0], prm[K_T1], prm[K_TLO], prm[K_THI])
        rt_hot = prm[K_RGG] * t_hot
        m_th = _gas_flow(1.0, prm[K_ATH], p_hot, rt_hot)
        m_to = _gas_flow(u[4], prm[K_CDA + 4], p_hot, rt_hot)
        m4 = m_to
        dh = prm[K_DHT] * t_hot / prm[K_TREF]
        in_hot = m2 + m3
        fuel_total = m0 + m2
        ox_total = m1 + m3

    mr_cc = _mixture_ratio(m1, m0)
    cstar = _cstar_fit(mr_cc, prm[K_C0], prm[K_C1], prm[K_C2], prm[K_CLO], prm[K_CHI])
    m_noz = max(p_cc - P_AMB, 0.0) * prm[K_AT] / cstar
    rt_cc = (prm[K_GAMMA] * cstar) ** 2
    out_hot = m_th + m_to

    # shafts: fuel pump on the H shaft, oxidizer pump on the O shaft
    m_pf = m0 + m2
    m_po = m1 + m3
    head_f = pf - prm[K_PTF]
    head_o = po - prm[K_PTO]
    pwr_pf = m_pf * head_f / (rho_f * prm[K_ETAPH])
    pwr_po = m_po * head_o / (rho_o * prm[K_ETAPO])
    pwr_th = prm[K_ETATH] * m_th * dh
    pwr_to = prm[K_ETATO] * m_to * dh
    tq_h = _turbine_torque(m_th, dh, prm[K_ETATH], w_h) - pwr_pf / max(w_h, OMEGA_FLOOR)
    if t < prm[K_TS]:
        tq_h += prm[K_TAUS]
    tq_o = _turbine_torque(m_to, dh, prm[K_ETATO], w_o) - pwr_po / max(w_o, OMEGA_FLOOR)

    dx[0] = rt_cc / prm[K_VCC] * (m0 + m1 - m_noz)
    dx[1] = rt_hot / prm[K_VGG] * (in_hot - out_hot)
    dx[2] = tq_h / prm[K_JH]
    dx[3] = tq_o / prm[K_JO]
    for i in range(N_VALVES):
        dx[4 + i] = (cmd[i] - u[i]) / prm[K_TAU + i]

    aux[A_PF] = pf
    aux[A_PO] = po
    aux[A_M0] = m0
    aux[A_M1] = m1
    aux[A_M2] = m2
    aux[A_M3] = m3
    aux[A_M4] = m4
    aux[A_MTH] = m_th
    aux[A_MTO] = m_to
    aux[A_MNOZ] = m_noz
    aux[A_THOT] = t_hot
    aux[A_CSTAR] = cstar
    aux[A_PWR_TH] = pwr_th
    aux[A_PWR_PH] = pwr_pf
    aux[A_PWR_TO] = pwr_to
    aux[A_PWR_PO] = pwr_po
    aux[A_MR_HOT] = mr_hot
    aux[A_MR_CC] = mr_cc
    aux[A_MR_GLOB] = _mixture_ratio(ox_total, fuel_total)
    aux[A_IN_CC] = m0 + m1
    aux[A_OUT_CC] = m_noz
    aux[A_IN_HOT] = in_hot
    aux[A_OUT_HOT] = out_hot


@njit(cache=True)
def _project(x):
    x[0] = max(x[0], P_AMB)
    x[1] = max(x[1], P_AMB)
    x[2] = max(x[2], 0.0)
    x[3] = max(x[3], 0.0)
    for i in range(4, 4 + N_VALVES):
        x[i] = min(max(x[i], 0.0), 1.0)


@njit(cache=True)
def _integrate(x, cmd, prm, t0, dt, nsteps, peaks):
    """Advance ``x`` in place by ``nsteps`` RK4 steps.

    Returns the index of the first step producing a non-finite state, or -1.
    ``peaks`` receives the maxima of p_cc, p_gg, omega_h, omega_o.
    """
    n = x.shape[0]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    aux = np.empty(N_AUX)
    for j in range(4):
        peaks[j] = x[j]
    for s in range(nsteps):
        t = t0 + s * dt
        _evaluate(x, cmd, prm, t, k1, aux)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        _evaluate(tmp, cmd, prm, t + 0.5 * dt, k2, aux)
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        _evaluate(tmp, cmd, prm, t + 0.5 * dt, k3, aux)
        for i in range(n):
            tmp[i] = x[i] + dt * k3[i]
        _evaluate(tmp, cmd, prm, t + dt, k4, aux)
        bad = False
        for i in range(n):
            x[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(x[i]):
                bad = True
        if bad:
            return s
        _project(x)
        for j in range(4):
            if x[j] > peaks[j]:
                peaks[j] = x[j]
    return -1


@dataclass
class EngineState:
    p_cc: float
    p_gg: float
    omega_h: float
    omega_o: float
    valves: np.ndarray = field(default_factory=lambda: np.zeros(N_VALVES))
    t: float = 0.0

    def vector(self):
        return np.concatenate(([self.p_cc, self.p_gg, self.omega_h, self.omega_o],
                               np.asarray(self.valves, dtype=float)))

    @classmethod
    def from_vector(cls, x, t=0.0):
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), float(x[1]), float(x[2]), float(x[3]), x[IX_VALVES].copy(), t)

    @classmethod
    def rest(cls, t=0.0):
        return cls(P_AMB, P_AMB, 0.0, 0.0, np.zeros(N_VALVES), t)


def _as_vector(state):
    if isinstance(state, EngineState):
        return state.vector()
    x = np.asarray(state, dtype=float)
    if x.shape != (N_STATE,):
        raise ConfigError(f"state vector must have {N_STATE} entries, got shape {x.shape}")
    return x.copy()


def _check_finite(vec, names):
    bad = ~np.isfinite(vec)
    if bad.any():
        raise NumericalFault(names[int(np.argmax(bad))])


def derivatives(state, cfg, cmd, t=0.0, prm=None):
    """Full right-hand side d(state)/dt for a 3- or 5-entry valve command."""
    x = _as_vector(state)
    if prm is None:
        prm = pack(cfg)
    dx = np.empty(N_STATE)
    aux = np.empty(N_AUX)
    _evaluate(x, cfg.full_command(cmd), prm, float(t), dx, aux)
    _check_finite(dx, STATE_NAMES)
    return dx


def auxiliaries(state, cfg, cmd=None, t=1e9, prm=None):
    """Named flows, powers, and mixture ratios at ``state``."""
    x = _as_vector(state)
    if prm is None:
        prm = pack(cfg)
    cmd = x[IX_VALVES] if cmd is None else cfg.full_command(cmd)
    dx = np.empty(N_STATE)
    aux = np.empty(N_AUX)
    _evaluate(x, cmd, prm, float(t), dx, aux)
    return dict(zip(AUX_NAMES, aux.tolist()))


def clamp_state(x):
    """Valve positions into [0, 1], pressures at least ambient, speeds non-negative."""
    x = np.array(x, dtype=float)
    _project(x)
    return x


def rk4_step(state, rhs, dt, t=0.0, project=None):
    """One classical fourth-order Runge-Kutta step of ``dx/dt = rhs(x, t)``.

    ``project`` (optional) is applied to the result, e.g. :func:`clamp_state`.
    """
    if not dt > 0:
        raise ConfigError(f"step size must be positive, got {dt}")
    x = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(x, t))
    k2 = np.asarray(rhs(x + 0.5 * dt * k1, t + 0.5 * dt))
    k3 = np.asarray(rhs(x + 0.5 * dt * k2, t + 0.5 * dt))
    k4 = np.asarray(rhs(x + dt * k3, t + dt))
    out = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return project(out) if project is not None else out


class Simulator:
    """Fixed-step integration of one engine instance.

    Not thread-safe; give each thread its own instance.
    """

    def __init__(self, cfg, state=None, dt=DT_PHYSICS):
        if not dt > 0:
            raise ConfigError("physics step must be positive")
        self.cfg = cfg
        self.dt = dt
        self._prm = pack(cfg)
        self.reset(state)

    def reset(self, state=None):
        st = EngineState.rest() if state is None else state
        self.x = _as_vector(st)
        self.t = st.t if isinstance(st, EngineState) else 0.0
        self.peaks = self.x[:4].copy()

    @property
    def state(self):
        return EngineState.from_vector(self.x, self.t)

    def advance(self, cmd, duration=CONTROL_DT):
        """Hold ``cmd`` for ``duration`` seconds; returns the new state vector."""
        nsteps = int(round(duration / self.dt))
        full = self.cfg.full_command(cmd)
        x0 = self.x.copy()
        peaks = np.empty(4)
        bad = _integrate(self.x, full, self._prm, self.t, self.dt, nsteps, peaks)
        if bad >= 0:
            t_fault = self.t + bad * self.dt
            # name the first non-finite component
            comp_name = STATE_NAMES[int(np.argmax(~np.isfinite(self.x)))]
            self.x = x0
            raise NumericalFault(comp_name, f"non-finite {comp_name} at t={t_fault:.4f} s")
        self.t = self.t + nsteps * self.dt
        self.peaks = peaks
        return self.x

    def auxiliaries(self, cmd=None):
        return auxiliaries(self.x, self.cfg, cmd, t=self.t, prm=self._prm)


# -- steady state -------------------------------------------------------------

def state_scales(cfg):
    lim = cfg.limits
    return np.array([lim.p_cc_max, lim.p_gg_max, lim.omega_h_max, lim.omega_o_max])


def steady_state(cfg, valves, guess=None, tol=1e-8, max_iter=10_000, relax_time=60.0):
    """Powered fixed point of the engine for fixed valve positions.

    ``valves`` holds 3 controlled or 5 positions. The search first relaxes
    in physical time from ``guess`` (default: a powered mid-range state,
    starter off), then runs damped Newton on the four physical states in
    scaled variables. Raises :class:`SteadyStateError` when no powered fixed
    point is found.
    """
    u = cfg.full_command(valves)
    prm = pack(cfg)
    scale = state_scales(cfg)
    t_far = max(cfg.t_start, 0.0) + 1e6  # starter long extinguished

    if guess is None:
        x = np.concatenate((0.5 * scale, u))
    else:
        x = _as_vector(guess)
        x[IX_VALVES] = u

    dx = np.empty(N_STATE)
    aux = np.empty(N_AUX)

    def resid(z):
        xx = np.concatenate((z * scale, u))
        _evaluate(xx, u, prm, t_far, dx, aux)
        return dx[:4] / scale

    # pseudo-time relaxation with the physical dynamics
    # one iteration = one 0.1 s relaxation chunk or one Newton step
    peaks = np.empty(4)
    iters = 0
    chunk = 100
    n_relax = int(round(relax_time / (chunk * DT_PHYSICS)))
    while iters < n_relax:
        bad = _integrate(x, u, prm, t_far, DT_PHYSICS, chunk, peaks)
        iters += 1
        if bad >= 0:
            raise SteadyStateError("non-finite state during relaxation")
        if np.max(np.abs(resid(x[:4] / scale))) < 1e-3:
            break

    z = x[:4] / scale
    r = resid(z)
    rn = np.max(np.abs(r))
    if auxiliaries(x, cfg, u, t=t_far, prm=prm)["in_hot"] <= comp.MDOT_EPS:
        # no gas reaches the turbines: the pumps spin down to rest
        raise SteadyStateError("valves admit no turbine drive flow; only the unpowered rest state satisfies the balance", rn)
    while rn >= tol:
        if iters >= max_iter:
            raise SteadyStateError("steady-state search did not converge", rn)
        iters += 1
        jac = np.empty((4, 4))
        for j in range(4):
            h = 1e-7 * max(abs(z[j]), 1e-3)
            zp = z.copy()
            zm = z.copy()
            zp[j] += h
            zm[j] -= h
            jac[:, j] = (resid(zp) - resid(zm)) / (2 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise SteadyStateError("singular Jacobian", rn) from None
        if not np.all(np.isfinite(step)):
            raise SteadyStateError("singular Jacobian", rn)
        lam = 1.0
        while lam > 1e-6:
            zn = z + lam * step
            zn = np.maximum(zn, [P_AMB / scale[0], P_AMB / scale[1], 0.0, 0.0])
            rn_new = np.max(np.abs(resid(zn)))
            if rn_new < rn:
                break
            lam *= 0.5
        else:
            raise SteadyStateError("line search failed", rn)
        z, r, rn = zn, resid(zn), rn_new

    x = np.concatenate((z * scale, u))
    a = auxiliaries(x, cfg, u, t=t_far, prm=prm)
    if x[2] <= OMEGA_FLOOR or a["in_cc"] <= comp.MDOT_EPS or a["in_hot"] <= comp.MDOT_EPS:
        raise SteadyStateError("only the unpowered rest state satisfies the balance", rn)
    return EngineState.from_vector(x, 0.0)


def balance_residuals(state, cfg):
    """Relative mass and power imbalances at a (supposed) steady state."""
    a = auxiliaries(state, cfg)
    rel = lambda x, y: abs(x - y) / max(abs(x), abs(y), 1e-300)
    return {
        "mass_cc": rel(a["in_cc"], a["out_cc"]),
        "mass_hot": rel(a["in_hot"], a["out_hot"]),
        "power_h": rel(a["power_turbine_h"], a["power_pump_h"]),
        "power_o": rel(a["power_turbine_o"], a["power_pump_o"]),
    }
