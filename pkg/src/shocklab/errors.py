"""Exception hierarchy shared by all shocklab modules."""


class ShockLabError(Exception):
    """Base class for every error raised by shocklab."""


class DomainError(ShockLabError, ValueError):
    """A state lies outside the neighborhood where the system is defined."""


class EvaluationError(ShockLabError, ArithmeticError):
    """An evaluator returned a non-finite value."""


class ModelError(ShockLabError, ValueError):
    """Unknown builtin model or invalid model parameters."""


class DissipativityError(ShockLabError):
    """No dissipativity certificate (compensator) could be found."""


class HugoniotError(ShockLabError):
    """Rankine-Hugoniot solve diverged or produced a degenerate shock."""


class ProfileError(ShockLabError):
    """Traveling-wave profile computation failed."""


class KernelError(ShockLabError):
    """Spectral data needed by the Green's-function kernels is ill-posed."""


class SimulationError(ShockLabError):
    """Time integration failed (CFL violation, blow-up, bad horizon...)."""


class ConfigError(ShockLabError, ValueError):
    """Run configuration failed validation."""
