"""Lyapunov spectra and gap estimators for surface group representations.

The main entry points are :class:`LyapunovSpectrum`,
:class:`TransverseExponent` and :class:`RenormalizedIntersection`, which
estimate the consecutive Lyapunov gaps of a representation by three
independent routes.
"""

__version__ = "0.1.0"

from .anosov import (  # noqa: E402
    TransverseExponent,
    anosov_diagnostic,
    boundary_flag,
    hyperconvexity_check,
    projective_derivative_norm,
    transverse_exponent,
)
from .hyperbolic import (  # noqa: E402
    SurfaceModel,
    UnitTangent,
    build_bolza_surface,
    fenchel_nielsen_twist,
    sample_liouville,
    track_geodesic,
    translation_length,
)
from .lyapunov import LyapunovSpectrum, SpectrumEstimate, convergence_curve, gap_report, spectrum  # noqa: E402
from .representation import (  # noqa: E402
    Representation,
    contragredient,
    eigenvalue_moduli,
    evaluate,
    symmetric_power,
    wedge_power,
)
from .thermo import (  # noqa: E402
    RenormalizedIntersection,
    entropy,
    enumerate_closed_geodesics,
    enumerate_orbits,
    orbit_weights,
    renormalized_intersection,
)
from .words import Word  # noqa: E402

__all__ = [
    "LyapunovSpectrum",
    "TransverseExponent",
    "RenormalizedIntersection",
    "Representation",
    "SpectrumEstimate",
    "SurfaceModel",
    "UnitTangent",
    "Word",
    "anosov_diagnostic",
    "boundary_flag",
    "build_bolza_surface",
    "contragredient",
    "convergence_curve",
    "eigenvalue_moduli",
    "entropy",
    "enumerate_closed_geodesics",
    "enumerate_orbits",
    "evaluate",
    "fenchel_nielsen_twist",
    "gap_report",
    "hyperconvexity_check",
    "orbit_weights",
    "projective_derivative_norm",
    "renormalized_intersection",
    "sample_liouville",
    "spectrum",
    "symmetric_power",
    "track_geodesic",
    "transverse_exponent",
    "translation_length",
    "wedge_power",
]
