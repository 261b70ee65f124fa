"""Synthetic instance generation, initialization strategies, and batch runs.

Ground truth is a Gaussian rank-r product A B^T with entries revealed
uniformly at random; the observed count is os_ratio times the dimension
(n + m - r) r of the rank-r variety.  Batch runs execute a list of
(algorithm, metric, init) cells on one shared instance and write per-cell
trace CSVs, a summary CSV, and convergence figures.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cost import Problem
from .errors import DegeneratePointError
from .geometry import FactorPair, MetricKind
from .fileio import write_summary_csv, write_trace_csv
from .sampled import SampleSet, SparseResidual, sampled_product, sp_times_dense, spT_times_dense
from .solvers import Algo, SolverConfig, Trace, solve

__all__ = [
    "GenSpec",
    "RunCell",
    "RunSpec",
    "CellResult",
    "generate_problem",
    "init_random",
    "init_spectral",
    "rmse_on",
    "run_experiment",
]

# Randomized range finder parameters for the spectral initializer.
_SVD_OVERSAMPLE = 5
_SVD_POWER_ITERS = 30


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a synthetic completion instance."""

    n: int
    m: int
    rank: int
    os_ratio: float
    seed: int = 0
    test_fraction: float = 0.0

    def __post_init__(self):
        if self.rank < 1 or self.rank > min(self.n, self.m):
            raise ValueError(f"rank {self.rank} out of range for {self.n}x{self.m}")
        if self.os_ratio <= 0.0:
            raise ValueError("os_ratio must be positive")
        if self.test_fraction < 0.0:
            raise ValueError("test_fraction must be nonnegative")
        if self.n_train < 1:
            raise ValueError("observed set would be empty")
        if self.n_train + self.n_test > self.n * self.m:
            raise ValueError(
                f"requested {self.n_train}+{self.n_test} samples exceed the "
                f"{self.n * self.m} available entries"
            )

    @property
    def n_train(self) -> int:
        return int(round(self.os_ratio * (self.n + self.m - self.rank) * self.rank))

    @property
    def n_test(self) -> int:
        return int(round(self.test_fraction * self.n_train))


def generate_problem(spec: GenSpec) -> tuple[Problem, FactorPair]:
    """Draw a rank-r Gaussian ground truth and a uniform random support.

    Returns the problem (with held-out entries when test_fraction > 0) and
    the ground-truth factors.  Deterministic given the seed.
    """
    rng = np.random.default_rng(spec.seed)
    A = rng.standard_normal((spec.n, spec.rank))
    B = rng.standard_normal((spec.m, spec.rank))
    total = spec.n_train + spec.n_test
    flat = rng.choice(spec.n * spec.m, size=total, replace=False)

    def to_set(indices: np.ndarray) -> SampleSet:
        rows = indices // spec.m
        cols = indices % spec.m
        values = np.einsum("ij,ij->i", A[rows], B[cols])
        return SampleSet(spec.n, spec.m, rows, cols, values)

    omega = to_set(flat[: spec.n_train])
    omega_test = to_set(flat[spec.n_train :]) if spec.n_test else None
    return Problem(omega, spec.rank, omega_test), FactorPair(A, B)


def init_random(spec: GenSpec, seed: int) -> FactorPair:
    """Standard-normal factors; resamples in the measure-zero degenerate case.

    The stream is salted so that passing the generator's seed here cannot
    reproduce the ground-truth factors.
    """
    rng = np.random.default_rng([seed, 0x1217])
    while True:
        try:
            return FactorPair(
                rng.standard_normal((spec.n, spec.rank)),
                rng.standard_normal((spec.m, spec.rank)),
            )
        except DegeneratePointError:
            continue


def init_spectral(prob: Problem, r: int) -> FactorPair:
    """Balanced factors from the dominant rank-r SVD of the rescaled sparse matrix.

    The observed matrix is rescaled by (n m / nnz) so its spectrum estimates
    the full matrix's, then a block power iteration with a fixed-seed start
    computes the truncated SVD without densifying.  The two factors share
    the singular values, so their Grams coincide.
    """
    omega = prob.omega
    if omega.nnz == 0:
        raise ValueError("spectral initialization needs a nonempty support")
    n, m = omega.n_rows, omega.n_cols
    scale = (n * m) / omega.nnz
    M = SparseResidual.on_support(omega, scale * omega.values)

    k = min(r + _SVD_OVERSAMPLE, min(n, m))
    rng = np.random.default_rng(0)
    Q = np.linalg.qr(sp_times_dense(M, rng.standard_normal((m, k))))[0]
    for _ in range(_SVD_POWER_ITERS):
        Q = np.linalg.qr(spT_times_dense(M, Q))[0]
        Q = np.linalg.qr(sp_times_dense(M, Q))[0]
    B = spT_times_dense(M, Q).T  # k x m block equal to Q^T M
    U_small, sing, Vt = np.linalg.svd(B, full_matrices=False)
    if r > sing.size or sing[r - 1] <= 1e-12 * sing[0]:
        raise DegeneratePointError(
            f"observed matrix has fewer than {r} significant singular values"
        )
    root = np.sqrt(sing[:r])
    return FactorPair((Q @ U_small[:, :r]) * root, Vt[:r].T * root)


def rmse_on(point: FactorPair, samples: SampleSet) -> float:
    """Root mean squared deviation of G H^T from the given entries."""
    if samples.nnz == 0:
        raise ValueError("rmse undefined on an empty sample set")
    diff = sampled_product(point.G, point.H, samples) - samples.values
    return float(np.sqrt(diff @ diff / samples.nnz))


@dataclass(frozen=True)
class RunCell:
    algo: Algo
    metric: MetricKind = MetricKind.SCALED
    init: str = "random"

    def __post_init__(self):
        if self.init not in ("random", "spectral"):
            raise ValueError(f"unknown init {self.init!r}")

    @property
    def label(self) -> str:
        metric_tag = "scaled" if self.metric is MetricKind.SCALED else "rightinv"
        return f"{self.algo.value}_{metric_tag}_{self.init}"


@dataclass(frozen=True)
class RunSpec:
    gen: GenSpec
    cells: tuple[RunCell, ...]
    config: SolverConfig = field(default_factory=SolverConfig)
    out_dir: Path | None = None

    def __post_init__(self):
        if not self.cells:
            raise ValueError("at least one (algo, metric, init) cell is required")
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.out_dir is not None:
            object.__setattr__(self, "out_dir", Path(self.out_dir))


@dataclass
class CellResult:
    cell: RunCell
    trace: Trace | None
    point: FactorPair | None
    test_rmse: float | None
    error: str | None = None
    trace_path: Path | None = None


def _summary_row(run: RunSpec, result: CellResult) -> dict:
    cell = result.cell
    row = {
        "algo": cell.algo.value,
        "metric": cell.metric.value,
        "init": cell.init,
        "error": result.error,
    }
    if result.trace is not None and result.trace.records:
        trace = result.trace
        row.update(
            {
                "status": trace.status.value if trace.status else None,
                "iterations": trace.final.iteration,
                "iters_to_tol": trace.iterations_to_cost(run.config.cost_tol),
                "final_cost": trace.final.cost,
                "final_grad_norm": trace.final.grad_norm,
                "test_rmse": result.test_rmse,
                "wall_time_s": trace.final.wall_time_s,
            }
        )
    return row


def run_experiment(
    run: RunSpec, plot: bool = True, problem: Problem | None = None
) -> list[CellResult]:
    """Run every cell on one shared instance; write traces, summary, figures.

    Cells share the generated problem (or the one passed in) and the init
    seed (run.config.seed).  Solver failures are recorded per cell and do
    not abort the batch.  When out_dir is set, each cell writes
    trace_<label>.csv, the batch writes summary.csv, and (unless disabled)
    convergence figures are rendered alongside.
    """
    if problem is None:
        prob, _truth = generate_problem(run.gen)
    else:
        prob = problem
        if (prob.n_rows, prob.n_cols) != (run.gen.n, run.gen.m):
            raise ValueError("problem dimensions do not match the run specification")
    results: list[CellResult] = []
    for cell in run.cells:
        cfg = replace(run.config, algo=cell.algo, metric=cell.metric)
        try:
            if cell.init == "spectral":
                x0 = init_spectral(prob, prob.rank)
            else:
                x0 = init_random(run.gen, cfg.seed)
            point, trace = solve(prob, x0, cfg)
            rmse = rmse_on(point, prob.omega_test) if prob.omega_test is not None else None
            results.append(CellResult(cell, trace, point, rmse))
        except Exception as exc:  # record and continue with the batch
            results.append(CellResult(cell, None, None, None, error=f"{type(exc).__name__}: {exc}"))

    if run.out_dir is not None:
        run.out_dir.mkdir(parents=True, exist_ok=True)
        for result in results:
            if result.trace is not None:
                result.trace_path = run.out_dir / f"trace_{result.cell.label}.csv"
                write_trace_csv(result.trace_path, result.trace)
        write_summary_csv(run.out_dir / "summary.csv", [_summary_row(run, r) for r in results])
        if plot:
            from .plotting import plot_convergence

            plot_convergence(results, run.out_dir)
    return results
