"""Few-photon scattering through chains of cross-Kerr sites."""
from .params import ChainSpec, FrequencyGrid, Propagation, SiteParams, gamma_fn, grid_build
from .kernels import KernelSpec, KernelVariant, OnShellPoint

__all__ = [
    "ChainSpec", "FrequencyGrid", "Propagation", "SiteParams", "gamma_fn", "grid_build",
    "KernelSpec", "KernelVariant", "OnShellPoint",
]
__version__ = "0.1.0"
