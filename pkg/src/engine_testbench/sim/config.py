"""Engine configuration, presets, and JSON serialization."""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError

CYCLE_KINDS = ("gas_generator", "expander_bleed")

# Valve slots in the state vector. The GG preset names them VCH, VCO, VGH,
# VGO, VGC; the expander-bleed preset VCF, VCO, VTB, VTF, VTO.
N_VALVES = 5


@dataclass
class ValveSpec:
    name: str
    tau_v: float
    C_dA: float
    rho: Optional[float] = None  # None: gas valve, density from upstream ideal-gas state


@dataclass
class Limits:
    p_cc_max: float
    p_gg_max: float
    omega_h_max: float
    omega_o_max: float
    mr_min: float  # allowed band for the hot-branch (GG) mixture ratio
    mr_max: float


@dataclass
class Fit:
    coeffs: list
    mr_range: list


@dataclass
class EngineConfig:
    """Parameters of the lumped cycle model (SI units throughout).

    ``V_gg`` is the gas-generator volume for the GG preset and the cooling
    jacket / turbine-inlet manifold volume for the expander-bleed preset.
    ``T_gg_fit`` is linear in MR; the expander preset uses a zero slope so
    the constant is the jacket outlet temperature.
    """

    cycle_kind: str
    V_gg: float
    V_cc: float
    J_H: float
    J_O: float
    a_p: list            # [fuel pump, oxidizer pump]
    c_p: list
    eta_p: list
    rho_p: list          # pumped liquid densities [fuel, oxidizer]
    p_tank: list         # pump inlet pressures [fuel, oxidizer]
    dh_t: float
    eta_tH: float
    eta_tO: float
    valves: list
    A_t: float
    cstar_fit: Fit
    T_gg_fit: Fit
    R_gg: float
    R_cc: float
    tau_start: float
    t_start: float
    limits: Limits
    gamma_cc: float = 1.2
    A_turb_H: float = 0.0    # fixed fuel-turbine orifice (GG preset)
    T_ref: float = 900.0     # GG: turbine work scales with T_gg / T_ref
    p_ref: float = 60.0e5    # expander: turbine work scales with (p_cc / p_ref)**0.8
    controlled: list = field(default_factory=list)
    fixed_commands: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.limits, dict):
            self.limits = Limits(**self.limits)
        if isinstance(self.cstar_fit, dict):
            self.cstar_fit = Fit(**self.cstar_fit)
        if isinstance(self.T_gg_fit, dict):
            self.T_gg_fit = Fit(**self.T_gg_fit)
        self.valves = [ValveSpec(**v) if isinstance(v, dict) else v for v in self.valves]
        self.validate()

    # -- validation ------------------------------------------------------
    def validate(self):
        if self.cycle_kind not in CYCLE_KINDS:
            raise ConfigError(f"unknown cycle_kind {self.cycle_kind!r}")
        positive = {
            "V_gg": self.V_gg, "V_cc": self.V_cc, "J_H": self.J_H, "J_O": self.J_O,
            "A_t": self.A_t, "R_gg": self.R_gg, "R_cc": self.R_cc, "dh_t": self.dh_t,
            "gamma_cc": self.gamma_cc - 1.0, "T_ref": self.T_ref, "p_ref": self.p_ref,
        }
        for name, value in positive.items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value!r}")
        for name in ("eta_tH", "eta_tO"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ConfigError(f"{name} must lie in (0, 1], got {v!r}")
        for name in ("a_p", "c_p", "eta_p", "rho_p", "p_tank"):
            v = getattr(self, name)
            if len(v) != 2:
                raise ConfigError(f"{name} needs [fuel, oxidizer] entries")
        if any(not 0.0 < e <= 1.0 for e in self.eta_p):
            raise ConfigError("pump efficiencies must lie in (0, 1]")
        if any(a <= 0 for a in self.a_p) or any(c < 0 for c in self.c_p):
            raise ConfigError("pump coefficients must be positive")
        if any(r <= 0 for r in self.rho_p):
            raise ConfigError("pump densities must be positive")
        if len(self.valves) != N_VALVES:
            raise ConfigError(f"expected {N_VALVES} valves, got {len(self.valves)}")
        names = [v.name for v in self.valves]
        if len(set(names)) != N_VALVES:
            raise ConfigError("valve names must be unique")
        for v in self.valves:
            if not v.tau_v > 0 or not v.C_dA > 0:
                raise ConfigError(f"valve {v.name}: tau_v and C_dA must be positive")
            if v.rho is not None and not v.rho > 0:
                raise ConfigError(f"valve {v.name}: rho must be positive")
        if len(self.controlled) != 3 or any(c not in names for c in self.controlled):
            raise ConfigError(f"controlled must name three of {names}")
        for name, value in self.fixed_commands.items():
            if name not in names or name in self.controlled:
                raise ConfigError(f"fixed command for unknown or controlled valve {name!r}")
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"fixed command for {name} outside [0, 1]")
        if self.tau_start < 0 or self.t_start < 0:
            raise ConfigError("starter torque and duration must be non-negative")
        lim = self.limits
        if min(lim.p_cc_max, lim.p_gg_max, lim.omega_h_max, lim.omega_o_max) <= 0:
            raise ConfigError("limits must be positive")
        if not 0 <= lim.mr_min < lim.mr_max:
            raise ConfigError("limits need 0 <= mr_min < mr_max")
        lo, hi = self.cstar_fit.mr_range
        if not lo < hi or len(self.cstar_fit.coeffs) != 3:
            raise ConfigError("cstar_fit needs three coefficients and an increasing range")
        grid = np.linspace(lo, hi, 201)
        c0, c1, c2 = self.cstar_fit.coeffs
        if np.any(c0 + c1 * grid + c2 * grid**2 <= 0):
            raise ConfigError("c*(MR) fit must be positive over its validity range")
        lo, hi = self.T_gg_fit.mr_range
        t0, t1 = self.T_gg_fit.coeffs
        if not lo < hi or min(t0 + t1 * lo, t0 + t1 * hi) <= 0:
            raise ConfigError("T_gg fit must be positive over its validity range")

    # -- helpers -----------------------------------------------------------
    @property
    def valve_names(self):
        return [v.name for v in self.valves]

    @property
    def controlled_index(self):
        names = self.valve_names
        return [names.index(c) for c in self.controlled]

    def full_command(self, cmd):
        """Expand a 3-vector of controlled commands to all five valves.

        A 5-vector is passed through unchanged.
        """
        cmd = np.asarray(cmd, dtype=float)
        if cmd.shape == (N_VALVES,):
            return np.clip(cmd, 0.0, 1.0)
        if cmd.shape != (3,):
            raise ConfigError(f"valve command must have 3 or 5 entries, got shape {cmd.shape}")
        full = np.array([self.fixed_commands.get(n, 1.0) for n in self.valve_names])
        full[self.controlled_index] = cmd
        return np.clip(full, 0.0, 1.0)

    def with_turbine_efficiency(self, eta_h, eta_o=None):
        return dataclasses.replace(self, eta_tH=eta_h, eta_tO=eta_h if eta_o is None else eta_o)

    # -- serialization -----------------------------------------------------
    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad engine config: {exc}") from exc

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, source):
        """Load from a path or a JSON string."""
        try:
            if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
                text = Path(source).read_text()
            else:
                text = source
            data = json.loads(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read engine config: {exc}") from exc
        return cls.from_dict(data)


def gas_generator():
    """Vulcain-like gas-generator cycle, LOX/LH2, about 100 bar nominal.

    With the chamber valves wide open and VGH/VGO/VGC near 0.6 the
    unrestricted engine settles close to 100 bar.
    """
    return EngineConfig(
        cycle_kind="gas_generator",
        V_gg=0.1,
        V_cc=1.5,
        J_H=0.2,
        J_O=0.3,
        a_p=[0.018706, 7.276e-3],
        c_p=[113.7, 0.2978],
        eta_p=[0.7, 0.75],
        rho_p=[71.0, 1141.0],
        p_tank=[3.0e5, 3.0e5],
        dh_t=1.2e6,
        eta_tH=1.0,
        eta_tO=1.0,
        valves=[
            ValveSpec("VCH", 0.1, 1.03e-3, 71.0),
            ValveSpec("VCO", 0.1, 1.413e-3, 1141.0),
            ValveSpec("VGH", 0.1, 1.82e-4, 71.0),
            ValveSpec("VGO", 0.1, 4.09e-5, 1141.0),
            ValveSpec("VGC", 0.1, 2.92e-4, None),
        ],
        A_t=0.03,
        cstar_fit=Fit([2080.0, 160.0, -20.0], [1.0, 9.0]),
        T_gg_fit=Fit([250.0, 700.0], [0.2, 1.6]),
        R_gg=2000.0,
        R_cc=1500.0,
        tau_start=400.0,
        t_start=1.0,
        limits=Limits(
            p_cc_max=120.0e5, p_gg_max=110.0e5, omega_h_max=4500.0, omega_o_max=2000.0,
            mr_min=0.3, mr_max=1.5,
        ),
        A_turb_H=6.07e-4,
        T_ref=900.0,
        controlled=["VGH", "VGO", "VGC"],
        fixed_commands={"VCH": 1.0, "VCO": 1.0},
    )


def expander_bleed():
    """LUMEN-like expander-bleed cycle, LOX/LNG, 40 to 80 bar throttle range."""
    return EngineConfig(
        cycle_kind="expander_bleed",
        V_gg=0.002,
        V_cc=0.04,
        J_H=6.3e-3,
        J_O=1.32e-2,
        a_p=[1.915e-3, 1.44e-3],
        c_p=[1640.0, 59.2],
        eta_p=[0.6, 0.6],
        rho_p=[422.0, 1141.0],
        p_tank=[3.0e5, 3.0e5],
        dh_t=4.34e5,
        eta_tH=1.0,
        eta_tO=1.0,
        valves=[
            ValveSpec("VCF", 0.1, 3.115e-5, 422.0),
            ValveSpec("VCO", 0.1, 1.522e-4, 1141.0),
            ValveSpec("VTB", 0.1, 8.98e-6, 422.0),
            ValveSpec("VTF", 0.1, 1.236e-5, None),
            ValveSpec("VTO", 0.1, 1.735e-5, None),
        ],
        A_t=2.5e-3,
        cstar_fit=Fit([1542.8, 192.0, -30.0], [1.0, 6.0]),
        T_gg_fit=Fit([400.0, 0.0], [0.0, 1.0]),
        R_gg=518.0,
        R_cc=400.0,
        tau_start=5.0,
        t_start=1.0,
        limits=Limits(
            p_cc_max=100.0e5, p_gg_max=110.0e5, omega_h_max=6000.0, omega_o_max=4000.0,
            mr_min=2.0, mr_max=5.0,
        ),
        p_ref=60.0e5,
        controlled=["VTB", "VCO", "VTO"],
        fixed_commands={"VCF": 1.0, "VTF": 1.0},
    )


PRESETS = {"gas_generator": gas_generator, "expander_bleed": expander_bleed}


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
