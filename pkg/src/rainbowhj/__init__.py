"""Rainbow max-call pricing (Monte Carlo, finite differences) and Hamilton-Jacobi tooling."""

__version__ = "0.1.0"

from .correspondence import (
    ResidualReport,
    ShortMapReport,
    hamiltonian_field,
    hamiltonian_residual,
    lagrangian_value,
    short_map_check,
    solution_metric,
)
from .errors import *  # noqa: F401,F403
from .hamilton_jacobi import (
    ConvexityReport,
    HamiltonianSpec,
    HJProblem,
    HopfLaxResult,
    LagrangianTable,
    abs_hamiltonian,
    abs_initial,
    affine_initial,
    bracket_radius,
    hopf_lax_evaluate,
    hopf_lax_solve,
    legendre_transform,
    lipschitz_estimate,
    max_call_initial,
    polynomial_hamiltonian,
    power4_hamiltonian,
    quadratic_hamiltonian,
    semigroup_residual,
    verify_convex_superlinear,
)
from .market_model import (
    MarketModel,
    OptionSpec,
    ValidatedModel,
    check_correlation,
    check_model,
    cholesky_factor,
    payoff_max_call,
    term_count,
    validate_model,
)
from .montecarlo import McEstimate, PathConfig, mc_price, sample_correlated_normals, simulate_terminal_spots
from .pde import (
    ConvectionDiffusionCoefficients,
    GridSpec,
    SurfaceSlice,
    ValueSurface,
    bs_closed_form_1d,
    bs_delta_1d,
    closed_form_surface,
    default_grid,
    delta_vector,
    explicit_stability_number,
    norm_cdf,
    solve_bs_pde,
    to_log_coordinates,
)
