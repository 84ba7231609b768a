"""Time-periodic solutions, discrete adjoints and design gradients.

The package computes fully discrete time-periodic solutions of parametrized
semi-discrete evolution equations M du/dt = r(u, mu, t) with a T-periodic
residual, solves the matching periodic dual (adjoint) problems, and from them
assembles exact parameter gradients of solver-consistent quantities of
interest, Floquet stability estimates, and gradient-based design
optimization, all through matrix-free operator actions.

The main entry points:

* ``tableau_library``, ``TimeGrid``, ``evolve``, ``accumulate_qoi``: DIRK
  time stepping and QoI quadrature.
* ``fixed_point_solve``, ``newton_krylov_solve``,
  ``optimization_shooting_solve``: shooting solvers for the periodic initial
  state; ``dual_solve`` for the periodic adjoint of one QoI.
* ``periodic_gradient``, ``grad_check``: exact gradients on the periodic
  manifold and their finite-difference verification.
* ``analyze_stability``: dominant Floquet multipliers.
* ``OptProblem``, ``optimize``: constrained design optimization.
* ``make_forced_vdp``, ``make_burgers_1d``, ``make_random_linear_periodic``:
  built-in models.
"""

__version__ = "0.1.0"

from .dirk import (
    DEFAULT_STAGE_TOL,
    QoiValue,
    TimeGrid,
    Trajectory,
    accumulate_qoi,
    evolve,
    step,
)
from .driver import OptHistory, OptIterate, OptProblem, optimize
from .errors import (
    ConfigError,
    DualSolveError,
    GradientError,
    OptimizationError,
    OracleError,
    ShootingError,
    SolverError,
    StageSolveError,
)
from .floquet import StabilityReport, analyze_stability
from .gradient import (
    GradCheckRow,
    GradientReports,
    LinearOracle,
    ManifoldGradient,
    dense_oracle_linear,
    grad_check,
    periodic_gradient,
)
from .krylov import KrylovReport, LinearOperator, arnoldi_eigs, gmres
from .models import (
    CallbackQoi,
    QuantityOfInterest,
    SemiDiscreteModel,
    make_burgers_1d,
    make_forced_vdp,
    make_linear_periodic,
    make_linear_qoi,
    make_random_linear_periodic,
)
from .sensitivity import (
    DualTrajectory,
    StageOperators,
    adjoint_backward_evolve,
    adjoint_sensitivity_apply,
    forward_sensitivity_apply,
)
from .shooting import (
    PeriodicSolution,
    SolveReport,
    dual_solve,
    fixed_point_solve,
    newton_krylov_solve,
    optimization_shooting_solve,
)
from .tableaux import ButcherTableau, stability_function, tableau_library

__all__ = [
    "ButcherTableau",
    "CallbackQoi",
    "ConfigError",
    "DEFAULT_STAGE_TOL",
    "DualSolveError",
    "DualTrajectory",
    "GradCheckRow",
    "GradientError",
    "GradientReports",
    "KrylovReport",
    "LinearOperator",
    "LinearOracle",
    "ManifoldGradient",
    "OptHistory",
    "OptIterate",
    "OptProblem",
    "OptimizationError",
    "OracleError",
    "PeriodicSolution",
    "QoiValue",
    "QuantityOfInterest",
    "SemiDiscreteModel",
    "ShootingError",
    "SolveReport",
    "SolverError",
    "StabilityReport",
    "StageOperators",
    "StageSolveError",
    "TimeGrid",
    "Trajectory",
    "accumulate_qoi",
    "adjoint_backward_evolve",
    "adjoint_sensitivity_apply",
    "analyze_stability",
    "arnoldi_eigs",
    "dense_oracle_linear",
    "dual_solve",
    "evolve",
    "fixed_point_solve",
    "forward_sensitivity_apply",
    "gmres",
    "grad_check",
    "make_burgers_1d",
    "make_forced_vdp",
    "make_linear_periodic",
    "make_linear_qoi",
    "make_random_linear_periodic",
    "newton_krylov_solve",
    "optimization_shooting_solve",
    "optimize",
    "periodic_gradient",
    "stability_function",
    "step",
    "tableau_library",
]
