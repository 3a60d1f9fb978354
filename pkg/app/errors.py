"""
Error hierarchy shared by the library and the `clebsch` command.

Every error knows the process exit code the command reports for it and can
render itself as a JSON-ready dict.
"""
from typing import Dict, Optional


class ClebschError(Exception):
    """Base class for every error raised by this project."""

    exit_code = 2

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict:
        payload = {
            'error': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
        }
        payload.update(self.details)
        return payload


class ConfigError(ClebschError, ValueError):
    """Run configuration is unreadable or violates the schema."""

    exit_code = 1


class ParameterError(ClebschError, ValueError):
    """SystemParams fail validation (ordering, finiteness)."""

    exit_code = 1


class NumericalRefusal(ClebschError, ArithmeticError):
    """A computation refuses its inputs (degeneracy, blow-up, branch trouble)."""

    exit_code = 2


class DegeneratePencilError(NumericalRefusal):
    """Some n_α or n′_α vanishes so the physical constants do not exist."""


class ParameterDegeneracyError(NumericalRefusal):
    """The pencil matrix is singular (two moduli coincide)."""


class PreconditionError(NumericalRefusal):
    """An input violates an operation's precondition, e.g. |p| != 1."""


class SeparationDegeneracyError(NumericalRefusal):
    """x1 = x2: the separation coordinates collide."""


class BranchError(NumericalRefusal):
    """A square root picked up a negative radicand during reconstruction."""


class BranchTrackingError(NumericalRefusal):
    """A sheet sign flipped away from a turning point."""

    def __init__(self, message: str, step: int, **details):
        super().__init__(message, step=step, **details)
        self.step = step


class ConsistencyError(NumericalRefusal):
    """A state does not lie on the levels a surface was built for."""


class BlowUpError(NumericalRefusal):
    """The integrated state became non-finite or exceeded the norm cap."""

    def __init__(self, message: str, last_good_time: float, **details):
        super().__init__(message, last_good_time=last_good_time, **details)
        self.last_good_time = last_good_time


class DegenerateCurveError(NumericalRefusal):
    """Branch points of the curve coincide and the computation cannot proceed."""


class BranchPointError(NumericalRefusal):
    """An integrand changes sign or blows up inside an integration segment."""


class ToleranceFailure(NumericalRefusal):
    """Adaptive quadrature did not converge."""

    def __init__(self, message: str, best_estimate: Optional[float] = None, **details):
        super().__init__(message, best_estimate=best_estimate, **details)
        self.best_estimate = best_estimate


class NoRealFamilyError(NumericalRefusal):
    """No real delta family exists for the requested σ′."""
