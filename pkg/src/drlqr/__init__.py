"""Domain-randomized LQR synthesis by minibatched policy gradient descent.

Layers, bottom up: `linalg` (Lyapunov/Riccati kernels), `lqr` (per-system
costs, gradients and derivative formulas), `domains`/`cartpole`
(randomization domains), `optimizer` (SGD / exact GD / fixed-sample
baseline), `anneal` (discount-annealing initializer), `theory` (closed-form
constants), `experiment`/`config`/`cli` (the trial runner and its artifacts).
"""

from .anneal import (
    AnnealConfig,
    AnnealResult,
    discount_annealing,
    discounted_cost,
    find_initial_gamma,
    gamma_update,
)
from .cartpole import (
    CartpoleDomain,
    CartpoleParams,
    DiamEstimate,
    DomainSpec,
    discretize,
    estimate_diam,
    linearize,
    nonlinear_dynamics,
    plant_for_length,
    sample_theta,
)
from .config import (
    ExperimentConfig,
    InitSpec,
    MethodSpec,
    TheoryConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from .domains import DiscreteDomain, DiscountedDomain, Domain, scale_plant
from .errors import (
    AnnealingError,
    ConfigError,
    DrlqrError,
    InfeasibleMemberError,
    InstabilityError,
    SynthesisError,
)
from .experiment import resolve_init, run_experiment, summarize
from .linalg import dlyap, dlyap_batch, is_stable, spectral_radius
from .lqr import (
    CostSpec,
    PlantSample,
    ThetaDirection,
    advantage_op,
    cost_to_go,
    dr_cost_estimate,
    dtheta_E,
    dtheta_P,
    dtheta_Sigma,
    identity_cost,
    lqr_cost,
    minibatch_gradient,
    policy_gradient,
    qk_matrix,
    solve_dare,
    state_cov,
)
from .optimizer import OptimizerConfig, RunRecord, dr_sgd, exact_gd, sa_fixed
from .rng import make_rng
from .theory import (
    MU_DOMINANCE,
    TheoryConstants,
    assemble_constants,
    batch_size,
    batch_size_bound,
    check_heterogeneity,
    check_S_membership,
    compute_cg,
    compute_LK,
    compute_Lcost,
    compute_rg,
    compute_Gbar_sigma,
    grad_theta_lipschitz,
    num_steps,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "AnnealingError",
    "CartpoleDomain",
    "CartpoleParams",
    "ConfigError",
    "CostSpec",
    "DiamEstimate",
    "DiscreteDomain",
    "DiscountedDomain",
    "Domain",
    "DomainSpec",
    "DrlqrError",
    "ExperimentConfig",
    "InfeasibleMemberError",
    "InitSpec",
    "InstabilityError",
    "MethodSpec",
    "MU_DOMINANCE",
    "OptimizerConfig",
    "PlantSample",
    "RunRecord",
    "SynthesisError",
    "TheoryConfig",
    "TheoryConstants",
    "ThetaDirection",
    "advantage_op",
    "assemble_constants",
    "batch_size",
    "batch_size_bound",
    "check_S_membership",
    "check_heterogeneity",
    "compute_Gbar_sigma",
    "compute_LK",
    "compute_Lcost",
    "compute_cg",
    "compute_rg",
    "config_from_dict",
    "config_to_dict",
    "cost_to_go",
    "discount_annealing",
    "discounted_cost",
    "discretize",
    "dlyap",
    "dlyap_batch",
    "dr_cost_estimate",
    "dr_sgd",
    "dtheta_E",
    "dtheta_P",
    "dtheta_Sigma",
    "estimate_diam",
    "exact_gd",
    "find_initial_gamma",
    "gamma_update",
    "grad_theta_lipschitz",
    "identity_cost",
    "is_stable",
    "linearize",
    "load_config",
    "lqr_cost",
    "make_rng",
    "minibatch_gradient",
    "nonlinear_dynamics",
    "num_steps",
    "plant_for_length",
    "policy_gradient",
    "qk_matrix",
    "resolve_init",
    "run_experiment",
    "sa_fixed",
    "sample_theta",
    "save_config",
    "scale_plant",
    "solve_dare",
    "spectral_radius",
    "state_cov",
    "summarize",
]
