"""Green's-function ingredients: modes, diffusion and damping rates, scattering, kernels."""
from .green import KernelDecomposition, build_kernel, errfn, heat_kernel, save_kernel_report
from .modes import (EndpointModes, HyperbolicModes, LinearCoefficients, diffusion_rate_oracle,
                    endpoint_modes, eta_closed_form, eta_printed_form, hyperbolic_modes,
                    linear_coefficients, modes_from_matrices, symbol_eta_oracle)
from .scattering import ScatteringData, endstate_scattering, scattering_coefficients

__all__ = [
    "KernelDecomposition", "build_kernel", "errfn", "heat_kernel", "save_kernel_report",
    "EndpointModes", "HyperbolicModes", "LinearCoefficients", "diffusion_rate_oracle",
    "endpoint_modes", "eta_closed_form", "eta_printed_form", "hyperbolic_modes",
    "linear_coefficients", "modes_from_matrices", "symbol_eta_oracle",
    "ScatteringData", "endstate_scattering", "scattering_coefficients",
]
