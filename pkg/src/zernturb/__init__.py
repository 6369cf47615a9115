"""Zernike mode algebra and two-photon detection through atmospheric turbulence."""

from .coupling import (
    CouplingCache,
    CouplingKey,
    a_coeff,
    a_selection,
    ga_contraction,
    gamma_coeff,
    overlap_gga,
    triple_bessel_q,
)
from .modes import (
    ModeIndex,
    ModeIndexError,
    PolarPoint,
    enumerate_modes,
    fourier_zernike_eval,
    radial_poly,
    zernike_eval,
)
from .turbulence import (
    AoConfig,
    DetectionSpec,
    ProbabilityGrid,
    TurbulenceParams,
    f_vector,
    g_tensor,
    g_tensor_vacuum,
    gamma_of_rytov,
    joint_probability,
    no_turbulence_probability,
    probability_grid,
)

__version__ = "0.1.0"
