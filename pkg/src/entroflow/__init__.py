"""Entropy decay rates and eigenvalue criteria for weighted diffusions on 1D/radial grids."""

from .errors import (
    BoundaryConditionViolated,
    ConfigError,
    DegenerateDomain,
    DomainError,
    EntroflowError,
    FloorViolation,
    LinearSolveFailure,
    MassNotNormalized,
    NegativeDensity,
    NewtonDiverged,
    NonFiniteWeight,
    NonPositiveData,
    NonpositiveLambda,
    OutsideEllipse,
    ParameterError,
    QOutOfRange,
    SolverDiverged,
    TailMassTooLarge,
    WindowTooShort,
)
from .potential import (
    Potential,
    evaluate,
    example1_epsilon_bound,
    flat,
    harmonic,
    harmonic_log,
    hessian_infimum_V,
    potential_from_spec,
    power_law,
    schrodinger_potential,
    tabulated,
    tail_mass,
)
from .grid import (
    Grid,
    delta_g,
    dirichlet_form,
    gradient_sq,
    inner_dgamma,
    integrate_dgamma,
    make_interval_grid,
    make_radial_grid,
    norm_dgamma,
    sphere_area,
)
from .functionals import (
    DEFAULT_FLOOR,
    LinearParams,
    PmeParams,
    entropy_linear,
    entropy_pme,
    fisher_linear,
    fisher_pme,
    k_linear,
    k_pme,
)
from .spectrum import (
    SpectralResult,
    epsilon_star,
    lambda1_linear,
    lambda1_pme,
    lambda1_schrodinger_bound,
)
from .flows import FlowConfig, Trace, initial_field, run_linear, run_pme
from .criteria import (
    LemmaCheck,
    PmeConstants,
    RegionReport,
    constants_chain,
    constants_report,
    discriminant,
    ellipse_margin,
    envelope_exponential,
    envelope_pme,
    envelope_refined,
    lemma_functional_check,
    refined_kappa,
    region_report,
    theta_from_p,
)
from .verify import (
    Verdict,
    check_envelope,
    default_slack_tol,
    dissipation_audit,
    fit_exponential_rate,
    poincare_test,
    refined_inequality_audit,
)

__version__ = "0.1.0"
