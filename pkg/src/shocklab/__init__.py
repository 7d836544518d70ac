"""Numerical toolkit for the stability of viscous shock profiles in
hyperbolic-parabolic systems of conservation laws.
"""
import os as _os

# SHOCKLAB_THREADS caps BLAS/OpenMP threads; it must be applied before numpy loads
_threads = _os.environ.get("SHOCKLAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import (ConfigError, DissipativityError, DomainError, EvaluationError, HugoniotError,  # noqa: E402
                     KernelError, ModelError, ProfileError, ShockLabError, SimulationError)
from .model import SystemDefinition, builtin_model, evaluate_system, load_model_file, register_system  # noqa: E402
from .profile import (GridConfig, ShockData, ShockProfile, compute_profile, hugoniot_solve,  # noqa: E402
                      shock_from_strength, validate_profile_decay)
from .structure import HypothesisReport, check_hypotheses, find_compensator  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ShockLabError", "DomainError", "EvaluationError", "ModelError", "DissipativityError",
    "HugoniotError", "ProfileError", "KernelError", "SimulationError", "ConfigError",
    "SystemDefinition", "builtin_model", "evaluate_system", "load_model_file", "register_system",
    "GridConfig", "ShockData", "ShockProfile", "compute_profile", "hugoniot_solve",
    "shock_from_strength", "validate_profile_decay",
    "HypothesisReport", "check_hypotheses", "find_compensator",
    "__version__",
]
