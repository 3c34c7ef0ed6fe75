"""Exception types shared across the package."""


class LatticeGateError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LatticeGateError, ValueError):
    """An argument is outside the physical domain of a formula."""


class CalibrationError(LatticeGateError, ValueError):
    """Calibration anchors are missing, degenerate, or inconsistent."""


class ProtocolError(LatticeGateError, ValueError):
    """A pulse sequence violates its structural invariants."""


class CapacityError(LatticeGateError, RuntimeError):
    """A request exceeds the configured size limit of an engine."""


class FitError(LatticeGateError, RuntimeError):
    """A least-squares fit failed to converge or is degenerate."""


class EstimationError(LatticeGateError, RuntimeError):
    """A Monte Carlo estimator failed to converge within its budget."""


class ConfigError(LatticeGateError, ValueError):
    """An experiment configuration file failed strict validation."""
