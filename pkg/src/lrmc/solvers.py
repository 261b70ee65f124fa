"""Solver family: gradient descent, conjugate gradient, trust region, Gauss-Seidel, LMaFit.

Every solver records a per-iteration trace (cost, metric gradient norm, step
or radius, trust-region diagnostics) and a terminal status instead of
raising on linesearch or degeneracy failures.  Shared stopping rule: cost at
or below cost_tol, metric gradient norm at or below grad_tol, or max_iters.
Each iterate is evaluated once: the sampled misfit feeds the cost, the
residual, the gradient, and the exact-linesearch quartic without repeated
passes over the support.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .cost import Problem, _hessian_apply, fd_hessian_vec
from .errors import DegeneratePointError, LinesearchFailureError, SingularGramError
from .geometry import (
    FactorPair,
    MetricKind,
    TangentVector,
    metric,
    metric_norm,
    project_horizontal,
    retract,
    transport,
)
from .linesearch import LinesearchState, armijo_adaptive, exact_step, initial_tr_radius
from .sampled import SparseResidual, sampled_product, sp_times_dense, spT_times_dense

__all__ = [
    "Algo",
    "SolveStatus",
    "TrustRegionConfig",
    "SolverConfig",
    "TraceRecord",
    "Trace",
    "solve",
    "solve_gd",
    "solve_cg",
    "solve_tr",
    "solve_gs",
    "solve_lmafit",
    "tcg_subproblem",
]


class Algo(enum.Enum):
    GD = "gd"
    CG = "cg"
    TR = "tr"
    GS = "gs"
    LMAFIT = "lmafit"


class SolveStatus(enum.Enum):
    COST_TOL = "CostTol"
    GRAD_TOL = "GradTol"
    MAX_ITERS = "MaxIters"
    LINESEARCH_FAILURE = "LinesearchFailure"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class TrustRegionConfig:
    """Inner-solve tolerances and iteration cap for the trust-region subproblem.

    The truncated CG stops once the residual drops below
    min(kappa, |r0|^theta) * |r0|; max_inner defaults to the quotient
    dimension (n + m) r - r^2.
    """

    theta: float = 1.0
    kappa: float = 0.9
    max_inner: int | None = None


@dataclass(frozen=True)
class SolverConfig:
    algo: Algo = Algo.CG
    metric: MetricKind = MetricKind.SCALED
    max_iters: int = 500
    cost_tol: float = 1e-20
    grad_tol: float = 1e-12
    seed: int = 0
    omega_relax: float = 1.5
    tr: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    # "adaptive" (Armijo with adaptive guess), "exact", or "fixed" (gradient descent only)
    step_policy: str = "adaptive"
    fixed_step: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.cost_tol < 0.0:
            raise ValueError("cost_tol must be nonnegative")
        if self.omega_relax < 1.0:
            raise ValueError("omega_relax must be at least 1")
        if self.step_policy not in ("adaptive", "exact", "fixed"):
            raise ValueError(f"unknown step_policy {self.step_policy!r}")


@dataclass
class TraceRecord:
    iteration: int
    wall_time_s: float
    cost: float
    grad_norm: float
    step_or_radius: float | None = None
    inner_iters: int | None = None
    rho: float | None = None


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    status: SolveStatus | None = None

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def costs(self) -> np.ndarray:
        return np.array([rec.cost for rec in self.records])

    def iterations_to_cost(self, threshold: float) -> int | None:
        """First iteration index whose cost is at or below the threshold."""
        for rec in self.records:
            if rec.cost <= threshold:
                return rec.iteration
        return None


@dataclass
class _Eval:
    """Everything derived from one pass over the support at one iterate."""

    misfit: np.ndarray          # sampled G H^T minus observed values
    S: SparseResidual           # (2/nnz) * misfit on the support
    cost: float
    raw: TangentVector          # metric gradient before horizontal projection
    grad: TangentVector
    gnorm: float


def _evaluate(x: FactorPair, prob: Problem, kind: MetricKind) -> _Eval:
    omega = prob.omega
    misfit = sampled_product(x.G, x.H, omega) - omega.values
    c = float(misfit @ misfit) / omega.nnz
    S = SparseResidual.on_support(omega, (2.0 / omega.nnz) * misfit)
    SH = sp_times_dense(S, x.H)
    StG = spT_times_dense(S, x.G)
    if kind is MetricKind.SCALED:
        raw = TangentVector(x.rsolve_gram_H(SH), x.rsolve_gram_G(StG))
    else:
        raw = TangentVector(SH @ x.gram_G, StG @ x.gram_H)
    grad = project_horizontal(x, raw)
    return _Eval(misfit, S, c, raw, grad, metric_norm(x, grad, kind))


def _stop_status(c: float, gnorm: float, cfg: SolverConfig) -> SolveStatus | None:
    if c <= cfg.cost_tol:
        return SolveStatus.COST_TOL
    if gnorm <= cfg.grad_tol:
        return SolveStatus.GRAD_TOL
    return None


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def __call__(self) -> float:
        return time.perf_counter() - self.t0


def solve_gd(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Riemannian gradient descent in the configured metric.

    Steps along the negative projected gradient; the step comes from the
    adaptive Armijo search seeded once by the exact step (default), from the
    exact linesearch each iteration, or from a fixed value, per
    cfg.step_policy.
    """
    clock = _Clock()
    trace = Trace()
    x = x0
    ev = _evaluate(x, prob, cfg.metric)
    trace.records.append(TraceRecord(0, clock(), ev.cost, ev.gnorm))
    ls_state: LinesearchState | None = None
    status = None
    for k in range(1, cfg.max_iters + 1):
        status = _stop_status(ev.cost, ev.gnorm, cfg)
        if status is not None:
            break
        d = -ev.grad
        try:
            if cfg.step_policy == "adaptive":
                if ls_state is None:
                    ls_state = LinesearchState(
                        exact_step(x, d, prob, positive_only=True, misfit=ev.misfit)
                    )
                step, ls_state = armijo_adaptive(
                    ls_state, x, d, prob, -ev.gnorm * ev.gnorm, base_cost=ev.cost
                )
            elif cfg.step_policy == "exact":
                step = exact_step(x, d, prob, positive_only=True, misfit=ev.misfit)
            else:
                step = cfg.fixed_step
            x = retract(x, d, step)
        except LinesearchFailureError:
            status = SolveStatus.LINESEARCH_FAILURE
            break
        except (DegeneratePointError, SingularGramError):
            status = SolveStatus.DEGENERATE
            break
        ev = _evaluate(x, prob, cfg.metric)
        trace.records.append(TraceRecord(k, clock(), ev.cost, ev.gnorm, step_or_radius=step))
    trace.status = status or _stop_status(ev.cost, ev.gnorm, cfg) or SolveStatus.MAX_ITERS
    return x, trace


def solve_cg(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Nonlinear conjugate gradient with clamped Polak-Ribiere updates.

    The previous direction and gradient are both carried to the new iterate
    by vector transport; beta clamps at zero and a non-descent direction
    resets to steepest descent.  Steps come from the exact linesearch.
    """
    clock = _Clock()
    trace = Trace()
    x = x0
    ev = _evaluate(x, prob, cfg.metric)
    trace.records.append(TraceRecord(0, clock(), ev.cost, ev.gnorm))
    d = -ev.grad
    status = None
    for k in range(1, cfg.max_iters + 1):
        status = _stop_status(ev.cost, ev.gnorm, cfg)
        if status is not None:
            break
        if metric(x, d, ev.grad, cfg.metric) >= 0.0:
            d = -ev.grad
        try:
            step = exact_step(x, d, prob, positive_only=True, misfit=ev.misfit)
            x_new = retract(x, d, step)
        except LinesearchFailureError:
            status = SolveStatus.LINESEARCH_FAILURE
            break
        except (DegeneratePointError, SingularGramError):
            status = SolveStatus.DEGENERATE
            break
        ev_new = _evaluate(x_new, prob, cfg.metric)
        grad_old_moved = transport(x, x_new, ev.grad)
        denom = metric(x_new, ev.grad, ev.grad, cfg.metric)
        beta = max(
            0.0,
            metric(x_new, ev_new.grad, ev_new.grad - grad_old_moved, cfg.metric) / denom,
        )
        d = -ev_new.grad + beta * transport(x, x_new, d)
        x, ev = x_new, ev_new
        trace.records.append(TraceRecord(k, clock(), ev.cost, ev.gnorm, step_or_radius=step))
    trace.status = status or _stop_status(ev.cost, ev.gnorm, cfg) or SolveStatus.MAX_ITERS
    return x, trace


def _boundary_step(inner, eta: TangentVector, p: TangentVector, delta: float) -> float:
    """Positive tau with |eta + tau p| = delta in the given inner product."""
    a = inner(p, p)
    b = inner(eta, p)
    c = inner(eta, eta) - delta * delta
    disc = max(b * b - a * c, 0.0)
    return (-b + np.sqrt(disc)) / a


def tcg_subproblem(
    point: FactorPair,
    grad: TangentVector,
    hess_op,
    delta: float,
    cfg: SolverConfig,
) -> tuple[TangentVector, int, bool]:
    """Steihaug-Toint truncated CG for the trust-region model at a point.

    Minimizes <grad, eta> + 0.5 <eta, hess_op(eta)> subject to the metric
    norm of eta staying within delta.  Stops at the boundary, on negative
    curvature (followed to the boundary), or when the residual drops below
    min(kappa, |r0|^theta) * |r0|.  Returns (eta, hessian applications,
    boundary_hit).
    """
    if delta <= 0.0:
        raise ValueError("trust-region radius must be positive")

    def inner(u: TangentVector, v: TangentVector) -> float:
        return metric(point, u, v, cfg.metric)

    dim = (point.n + point.m) * point.r - point.r * point.r
    max_inner = cfg.tr.max_inner if cfg.tr.max_inner is not None else dim

    eta = TangentVector.zero_like(point)
    r_vec = grad
    rr = inner(r_vec, r_vec)
    if rr == 0.0:
        return eta, 0, False
    p = -grad
    r0_norm = np.sqrt(rr)
    tol = r0_norm * min(cfg.tr.kappa, r0_norm**cfg.tr.theta)
    for j in range(1, max_inner + 1):
        Hp = hess_op(p)
        pHp = inner(p, Hp)
        if pHp <= 0.0:
            tau = _boundary_step(inner, eta, p, delta)
            return eta + tau * p, j, True
        alpha = rr / pHp
        eta_new = eta + alpha * p
        if np.sqrt(inner(eta_new, eta_new)) >= delta:
            tau = _boundary_step(inner, eta, p, delta)
            return eta + tau * p, j, True
        eta = eta_new
        r_vec = r_vec + alpha * Hp
        rr_new = inner(r_vec, r_vec)
        if np.sqrt(rr_new) <= tol:
            return eta, j, False
        p = -r_vec + (rr_new / rr) * p
        rr = rr_new
    return eta, max_inner, False


def solve_tr(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Trust-region solver with truncated-CG subproblems.

    The initial radius is the exact step along the negative scaled gradient
    times the gradient norm, capped at 1024 times that value.  Steps are
    accepted when the actual-to-model decrease ratio exceeds 0.1; the radius
    quarters below 0.25 and doubles (up to the cap) above 0.75 on boundary
    hits.  Under the scaled metric the Hessian action is analytic; under the
    right-invariant metric the transported finite-difference operator is
    used instead.
    """
    clock = _Clock()
    trace = Trace()
    x = x0
    ev = _evaluate(x, prob, cfg.metric)
    trace.records.append(TraceRecord(0, clock(), ev.cost, ev.gnorm))
    status = _stop_status(ev.cost, ev.gnorm, cfg)
    if status is not None:
        trace.status = status
        return x, trace

    delta, delta_max = initial_tr_radius(x, prob)
    if delta == 0.0:
        trace.status = SolveStatus.GRAD_TOL
        return x, trace

    def hess_at(pt: FactorPair, at: _Eval):
        if cfg.metric is MetricKind.SCALED:
            # reuse the residual and unprojected gradient already computed there
            return lambda v: _hessian_apply(pt, prob, v, at.S, at.raw)
        return lambda v: fd_hessian_vec(pt, prob, v, cfg.metric)

    status = None
    for k in range(1, cfg.max_iters + 1):
        status = _stop_status(ev.cost, ev.gnorm, cfg)
        if status is not None:
            break
        hop = hess_at(x, ev)
        eta, n_inner, boundary = tcg_subproblem(x, ev.grad, hop, delta, cfg)
        model_dec = -(
            metric(x, ev.grad, eta, cfg.metric) + 0.5 * metric(x, eta, hop(eta), cfg.metric)
        )
        try:
            candidate = retract(x, eta, 1.0)
            ev_cand = _evaluate(candidate, prob, cfg.metric)
            actual_dec = ev.cost - ev_cand.cost
        except (DegeneratePointError, SingularGramError):
            candidate = None
            actual_dec = -np.inf
        rho = actual_dec / max(model_dec, 1e-300)
        if rho < 0.25:
            delta *= 0.25
        elif rho > 0.75 and boundary:
            delta = min(2.0 * delta, delta_max)
        if rho > 0.1 and candidate is not None:
            x, ev = candidate, ev_cand
        trace.records.append(
            TraceRecord(
                k, clock(), ev.cost, ev.gnorm, step_or_radius=delta, inner_iters=n_inner, rho=rho
            )
        )
    trace.status = status or _stop_status(ev.cost, ev.gnorm, cfg) or SolveStatus.MAX_ITERS
    return x, trace


def _solve_relaxed(
    prob: Problem, x0: FactorPair, cfg: SolverConfig, relax: float
) -> tuple[FactorPair, Trace]:
    clock = _Clock()
    trace = Trace()
    x = x0
    status = None
    try:
        ev = _evaluate(x, prob, MetricKind.SCALED)
    except (DegeneratePointError, SingularGramError):
        trace.status = SolveStatus.DEGENERATE
        return x, trace
    trace.records.append(TraceRecord(0, clock(), ev.cost, ev.gnorm))
    for k in range(1, cfg.max_iters + 1):
        status = _stop_status(ev.cost, ev.gnorm, cfg)
        if status is not None:
            break
        dG, dH = ev.raw.zG, ev.raw.zH
        try:
            if relax == 1.0:
                x = FactorPair(x.G - dG, x.H - dH)
            else:
                x = FactorPair(
                    (1.0 - relax) * x.G + relax * (x.G - dG),
                    (1.0 - relax) * x.H + relax * (x.H - dH),
                )
            ev = _evaluate(x, prob, MetricKind.SCALED)
        except (DegeneratePointError, SingularGramError):
            status = SolveStatus.DEGENERATE
            break
        trace.records.append(TraceRecord(k, clock(), ev.cost, ev.gnorm, step_or_radius=relax))
    trace.status = status or _stop_status(ev.cost, ev.gnorm, cfg) or SolveStatus.MAX_ITERS
    return x, trace


def solve_gs(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Simultaneous Gauss-Seidel update: both factors move by the full scaled
    direction computed from the residual frozen at the current iterate."""
    return _solve_relaxed(prob, x0, cfg, 1.0)


def solve_lmafit(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Over-relaxed Gauss-Seidel with fixed weight cfg.omega_relax.

    The weight is a configuration knob here; the adaptive tuning schedule of
    the original method is out of scope.  A weight of 1 reproduces solve_gs
    exactly.
    """
    return _solve_relaxed(prob, x0, cfg, cfg.omega_relax)


_DISPATCH = {
    Algo.GD: solve_gd,
    Algo.CG: solve_cg,
    Algo.TR: solve_tr,
    Algo.GS: solve_gs,
    Algo.LMAFIT: solve_lmafit,
}


def solve(prob: Problem, x0: FactorPair, cfg: SolverConfig) -> tuple[FactorPair, Trace]:
    """Dispatch on cfg.algo."""
    return _DISPATCH[cfg.algo](prob, x0, cfg)
