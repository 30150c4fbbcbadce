"""Exception hierarchy shared across the test bench.

The CLI maps these onto exit codes (see ``engine_testbench.cli``).
"""


class TestbenchError(Exception):
    """Base class for all package errors."""


class ConfigError(TestbenchError, ValueError):
    """Invalid configuration, scenario, or argument."""


class ShapeError(TestbenchError, ValueError):
    """Array dimensions do not match what an operation expects."""


class RangeError(TestbenchError, ValueError):
    """Input lies outside the domain where a function is defined."""


class NumericalFault(TestbenchError, ArithmeticError):
    """Non-finite values produced by the simulation.

    ``component`` names the offending state or quantity.
    """

    def __init__(self, component, message=None):
        self.component = component
        super().__init__(message or f"non-finite value in {component}")


class SteadyStateError(NumericalFault):
    """Steady-state search failed or only found the unpowered rest state."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__("steady_state", f"{message} (residual {residual:.3e})")


class CrashError(NumericalFault):
    """A hard limit was exceeded during a simulation run."""

    def __init__(self, quantity, value, limit, t):
        self.value = value
        self.limit = limit
        self.t = t
        super().__init__(
            quantity, f"{quantity}={value:.6g} exceeded hard limit {limit:.6g} at t={t:.3f} s"
        )


class TrainingError(TestbenchError, RuntimeError):
    """Training diverged or could not start."""
