"""Subwavelength resonances of a soft elastic inclusion in an elastic medium.

Submodules
----------
geometry      surface meshes, exact volume moments, rigid-motion basis
kernels       Kupradze and traction kernels, medium parameters
boundary_ops  Galerkin single-layer and Neumann-Poincare operators, DtN map
resonance     resonance matrices, asymptotic and quadratic-eigenproblem resonances
scattering    modal amplitudes, enhancement, far and exterior fields
io            run configuration and CSV serialization
"""

import logging

from .boundary_ops import (
    BoundaryOperator,
    DtNMap,
    QuadratureConfig,
    assemble_neumann_poincare,
    assemble_single_layer,
    dtn_apply,
    dtn_first_order,
    np_identity_residual,
    solve_single_layer,
)
from .geometry import (
    MeshError,
    SurfaceMesh,
    ellipsoid,
    icosphere,
    load_mesh,
    refine,
    rigid_basis,
    unit_cube,
    volume_moments,
)
from .kernels import ElasticMedium, gamma_const, kelvin, kupradze, traction_kernel
from .resonance import (
    ResonanceInputs,
    asymptotic_resonances,
    compare_spectra,
    qep_resonances,
    spectral_decompose,
)
from .scattering import (
    IncidentWave,
    RegimeWarning,
    amplitudes,
    boundary_density,
    enhancement_curve,
    exterior_field,
    far_field,
    fibonacci_directions,
    interior_field,
)

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"
