"""Semi-implicit local-linearization solver for index-1 stochastic
differential-algebraic equations ``A(t) dZ = f(t, Z) dt + g(t, Z) dW``."""

__version__ = "0.1.0"

from .brownian import BrownianLattice, coarsen, generate
from .convergence import (
    ConvergenceConfig,
    ConvergenceReport,
    compare_exact,
    fit_rate,
    pathwise_error,
    run_study,
)
from .model import (
    AssumptionReport,
    DerivativeConfig,
    SdaeProblem,
    assess,
    check_index1,
    check_initial_consistency,
    check_monotone,
    dfdt,
    jacobian,
)
from .pencil import ProjectorBundle, ToleranceConfig, projector_bundle, pseudo_inverse
from .stepper import (
    SolveOptions,
    Trajectory,
    constraint_residual,
    integrate,
    integrate_decomposed,
    integrate_em,
    integrate_ll,
    step_decomposed,
    step_em,
    step_ll,
)
