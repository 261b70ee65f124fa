"""Fixed-rank matrix completion on the quotient geometry of G H^T factorizations.

The search space is the set of rank-r matrices represented by full-rank
factor pairs up to the group of invertible r-by-r rescalings.  The inner
product weights each factor block by the Gram matrix of the opposite
factor, which preconditions gradients for the completion cost; first-order
(gradient descent, conjugate gradient with exact linesearch) and
second-order (trust-region) solvers run on this geometry, next to the
right-invariant metric and Gauss-Seidel/LMaFit baselines for comparison.
"""

from .cost import (
    Problem,
    cost,
    euclidean_gradient,
    fd_hessian_vec,
    hessian_vec,
    riemannian_gradient,
)
from .fileio import (
    read_meta,
    read_sample_set,
    read_trace_csv,
    write_meta,
    write_sample_set,
    write_summary_csv,
    write_trace_csv,
)
from .errors import DegeneratePointError, LinesearchFailureError, SingularGramError
from .geometry import (
    FactorPair,
    MetricKind,
    TangentVector,
    compute_lambda,
    connection_correction,
    is_horizontal,
    metric,
    metric_norm,
    project_horizontal,
    retract,
    transport,
)
from .harness import (
    CellResult,
    GenSpec,
    RunCell,
    RunSpec,
    generate_problem,
    init_random,
    init_spectral,
    rmse_on,
    run_experiment,
)
from .linesearch import (
    LinesearchState,
    QuarticCoeffs,
    armijo_adaptive,
    cubic_real_roots,
    exact_step,
    initial_tr_radius,
    quartic_coeffs,
)
from .sampled import (
    SampleSet,
    SparseResidual,
    residual,
    sampled_product,
    sp_times_dense,
    spT_times_dense,
)
from .solvers import (
    Algo,
    SolveStatus,
    SolverConfig,
    Trace,
    TraceRecord,
    TrustRegionConfig,
    solve,
    solve_cg,
    solve_gd,
    solve_gs,
    solve_lmafit,
    solve_tr,
    tcg_subproblem,
)

__version__ = "0.1.0"

__all__ = [
    "Algo",
    "CellResult",
    "DegeneratePointError",
    "FactorPair",
    "GenSpec",
    "LinesearchFailureError",
    "LinesearchState",
    "MetricKind",
    "Problem",
    "QuarticCoeffs",
    "RunCell",
    "RunSpec",
    "SampleSet",
    "SingularGramError",
    "SolveStatus",
    "SolverConfig",
    "SparseResidual",
    "TangentVector",
    "Trace",
    "TraceRecord",
    "TrustRegionConfig",
    "armijo_adaptive",
    "compute_lambda",
    "connection_correction",
    "cost",
    "cubic_real_roots",
    "euclidean_gradient",
    "exact_step",
    "fd_hessian_vec",
    "generate_problem",
    "hessian_vec",
    "init_random",
    "init_spectral",
    "initial_tr_radius",
    "is_horizontal",
    "metric",
    "metric_norm",
    "project_horizontal",
    "quartic_coeffs",
    "read_meta",
    "read_sample_set",
    "read_trace_csv",
    "residual",
    "retract",
    "riemannian_gradient",
    "rmse_on",
    "run_experiment",
    "sampled_product",
    "solve",
    "solve_cg",
    "solve_gd",
    "solve_gs",
    "solve_lmafit",
    "solve_tr",
    "sp_times_dense",
    "spT_times_dense",
    "tcg_subproblem",
    "transport",
    "write_meta",
    "write_sample_set",
    "write_summary_csv",
    "write_trace_csv",
]
