"""Component laws of the lumped engine model.

Each law is a plain function of floats so it can be called directly and also
compiled with numba for the simulation kernel (see ``model.py``).
"""

import math

from ..errors import ConfigError

P_AMB = 1.0e5        # ambient pressure floor [Pa]
OMEGA_FLOOR = 10.0   # speed floor in torque laws [rad/s]
MDOT_EPS = 1.0e-6    # below this a fuel flow counts as zero for mixture ratios [kg/s]


def valve_step(u, u_cmd, tau_v, dt):
    """Exact first-order actuator update over one step of length ``dt``."""
    if not tau_v > 0.0 or not dt > 0.0:
        raise ConfigError(f"valve time constant and step must be positive (tau_v={tau_v}, dt={dt})")
    u_new = u_cmd + (u - u_cmd) * math.exp(-dt / tau_v)
    return min(max(u_new, 0.0), 1.0)


def valve_flow(u, C_dA, rho, dp):
    """Incompressible orifice flow with an effective area linear in position.

    Returns 0 for a non-positive pressure drop (no backflow).
    """
    if dp <= 0.0 or u <= 0.0:
        return 0.0
    return u * C_dA * math.sqrt(2.0 * rho * dp)


def pump_head(omega, mdot, a_p, c_p, rho):
    """Quadratic pump curve, floored at zero head."""
    return max(rho * (a_p * omega * omega - c_p * mdot * mdot), 0.0)


def turbine_torque(mdot_t, dh_t, eta_t, omega):
    return eta_t * mdot_t * dh_t / max(omega, OMEGA_FLOOR)


def mixture_ratio(mdot_ox, mdot_fu):
    """Oxidizer-to-fuel ratio with sentinel 0 for a vanishing fuel flow."""
    if mdot_fu < MDOT_EPS:
        return 0.0
    return mdot_ox / mdot_fu


def cstar_fit(mr, c0, c1, c2, mr_lo, mr_hi):
    """Quadratic characteristic-velocity fit, evaluated on the clamped MR range."""
    m = min(max(mr, mr_lo), mr_hi)
    return c0 + c1 * m + c2 * m * m


def temperature_fit(mr, t0, t1, mr_lo, mr_hi):
    m = min(max(mr, mr_lo), mr_hi)
    return t0 + t1 * m


def pump_outlet_pressure(p_in, omega, a_p, c_p, rho, k1, p1, k2, p2):
    """Solve the pump/branch algebraic loop for the pump outlet pressure.

    The pump feeds two branches with flow ``k_i*sqrt(max(p - p_i, 0))``
    (``k_i = u_i*C_dA_i*sqrt(2*rho)``). The outlet pressure satisfies
    ``p = p_in + pump_head(omega, m1 + m2)``; the residual is strictly
    decreasing in ``p`` so the root is unique. Safeguarded Newton.
    """
    head0 = rho * a_p * omega * omega
    lo = p_in
    hi = p_in + head0
    if head0 <= 0.0 or (k1 <= 0.0 and k2 <= 0.0):
        return hi
    p = hi
    for _ in range(100):
        d1 = p - p1
        d2 = p - p2
        m = 0.0
        dm = 0.0
        if k1 > 0.0 and d1 > 0.0:
            s = math.sqrt(d1)
            m += k1 * s
            dm += 0.5 * k1 / s
        if k2 > 0.0 and d2 > 0.0:
            s = math.sqrt(d2)
            m += k2 * s
            dm += 0.5 * k2 / s
        h = rho * (a_p * omega * omega - c_p * m * m)
        if h > 0.0:
            f = p_in + h - p
            df = -2.0 * rho * c_p * m * dm - 1.0
        else:
            f = p_in - p
            df = -1.0
        if f > 0.0:
            lo = p
        else:
            hi = p
        if f == 0.0 or hi - lo <= 1e-13 * hi:
            return p
        step = p - f / df
        if step <= lo or step >= hi:
            step = 0.5 * (lo + hi)
        if abs(step - p) <= 1e-14 * p:
            return step
        p = step
    return p
