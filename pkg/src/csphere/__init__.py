"""Constructive zonal harmonic analysis on odd-dimensional complex spheres,
with an experiment harness that measures the classical approximation-theory
inequalities (Bernstein, Nikolskii, Jackson, Kolmogorov, Cesaro-mean norm
regimes, Levy means) and nonlinear m-term approximation rates."""

from .geometry import (
    DiskQuadrature,
    RandomSource,
    SphereContext,
    SpherePoint,
    SphereQuadrature,
    build_disk_rule,
    build_sphere_rule,
    discrete_lp_norm,
    sample_complex_sphere,
    sample_real_sphere,
    zonal_integral,
)
from .kernels import (
    ZonalKernel,
    cesaro_kernel,
    convolve,
    fractional_kernel_split,
    kernel_lp_norm,
    kernel_sup_norm,
    projector_kernel,
    vallee_poussin_kernel,
)
from .specfun import (
    ChiFunction,
    JacobiParams,
    ball_volume,
    cesaro_number,
    chi_eval,
    chi_smooth,
    disk_poly_eval,
    finite_difference,
    jacobi_eval,
    volume_ratio,
)
from .spectral import (
    BasisSet,
    SpectralFunction,
    analyze,
    bidegree_dim,
    build_orthonormal_basis,
    eigenspace_dim,
    eigenvalue,
    fractional_derivative,
    fractional_integral,
    sobolev_sample,
    space_dim,
    synthesize,
)

__version__ = "0.1.0"
