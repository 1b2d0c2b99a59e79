"""burgerslab: fractional Brownian initial data for the inviscid Burgers
equation — samplers, convex-envelope solver, dimension and persistence
estimators, and kernel-space trend shifts."""

from .grids import GridPath, RandomnessSpec, SampleGrid, check_hurst
from .fbm import (
    fbm_covariance,
    fgn_autocovariance,
    ifbm_covariance,
    fbm_ifbm_cross_covariance,
    sample_fbm_exact,
    sample_fbm_fast,
    integrate_path,
)
from .envelopes import (
    ConvexEnvelope,
    SlopePair,
    envelope_backend,
    lower_envelope,
    upper_envelope,
    slope_pair,
    windowed_slope_pair,
    functional_F,
    nodal_event,
)
from .burgers import (
    LagrangianSolution,
    ParticleSystem,
    build_potential,
    solve,
    particles_from_path,
    midpoint_particles,
    sticky_simulate,
    sticky_shock_clusters,
    holder_check,
)
from .fractal import box_count, dimension_estimate
from .fitting import ScalingFit
from .persistence import (
    BarrierEvent,
    McEstimate,
    ChainReport,
    estimate_persistence,
    exponent_fit,
    refinement_study,
    verify_chain,
)
from .rkhs import (
    KernelSpace,
    TrendFunction,
    build_space,
    rkhs_norm,
    localizer_trends,
    psi_trend,
    combined_trend,
    verify_shift_inequality,
)

__version__ = "0.1.0"
