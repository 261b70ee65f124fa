"""Numerical invariant batteries for the geometry and the calculus.

These run from the `check` CLI verb and from the acceptance suite.  Each
battery sweeps randomized instances at fixed seeds and reports the worst
normalized defect against its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cost import Problem, cost, fd_hessian_vec, hessian_vec, riemannian_gradient
from .geometry import (
    FactorPair,
    MetricKind,
    TangentVector,
    metric,
    metric_norm,
    project_horizontal,
    retract,
)
from .harness import GenSpec, generate_problem

__all__ = ["CheckResult", "geometry_invariant_suite", "calculus_suite", "run_all_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}  (worst {self.worst:.3e}, tol {self.tolerance:.1e})"


def _pair_norm(v: TangentVector) -> float:
    return v.frobenius_norm()


def _random_point(rng: np.random.Generator, max_n: int = 50, max_r: int = 8) -> FactorPair:
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(2, max_n + 1))
    r = int(rng.integers(1, min(max_r, n, m) + 1))
    return FactorPair(rng.standard_normal((n, r)), rng.standard_normal((m, r)))


def _random_tangent(rng: np.random.Generator, point: FactorPair) -> TangentVector:
    return TangentVector(
        rng.standard_normal(point.G.shape), rng.standard_normal(point.H.shape)
    )


def _vertical(point: FactorPair, lam: np.ndarray) -> TangentVector:
    return TangentVector(-point.G @ lam, point.H @ lam.T)


def _well_conditioned_gl(rng: np.random.Generator, r: int, cond: float = 100.0) -> np.ndarray:
    # Orthogonal factors with singular values spread over [1, cond].
    U = np.linalg.qr(rng.standard_normal((r, r)))[0]
    V = np.linalg.qr(rng.standard_normal((r, r)))[0]
    svals = np.logspace(0.0, np.log10(cond), r) if r > 1 else np.array([1.0])
    return U @ np.diag(svals) @ V.T


def _act_point(point: FactorPair, M: np.ndarray) -> FactorPair:
    return FactorPair(point.G @ np.linalg.inv(M), point.H @ M.T)


def _act_tangent(vec: TangentVector, M: np.ndarray) -> TangentVector:
    return TangentVector(vec.zG @ np.linalg.inv(M), vec.zH @ M.T)


def geometry_invariant_suite(instances: int = 100, seed: int = 2024) -> list[CheckResult]:
    """Projection idempotence, vertical kernel, metric fiber invariance,
    and scaled orthogonality of the horizontal range to the vertical space."""
    rng = np.random.default_rng(seed)
    worst_idem = worst_kernel = worst_fiber = worst_orth = 0.0
    for _ in range(instances):
        point = _random_point(rng)
        eta = _random_tangent(rng, point)
        lam = rng.standard_normal((point.r, point.r))

        proj = project_horizontal(point, eta)
        proj2 = project_horizontal(point, proj)
        worst_idem = max(worst_idem, _pair_norm(proj2 - proj) / _pair_norm(eta))

        vert = _vertical(point, lam)
        worst_kernel = max(
            worst_kernel, _pair_norm(project_horizontal(point, vert)) / _pair_norm(vert)
        )

        xi = _random_tangent(rng, point)
        M = _well_conditioned_gl(rng, point.r)
        point_m = _act_point(point, M)
        xi_m, eta_m = _act_tangent(xi, M), _act_tangent(eta, M)
        for kind in (MetricKind.SCALED, MetricKind.RIGHT_INVARIANT):
            ref = metric(point, xi, eta, kind)
            moved = metric(point_m, xi_m, eta_m, kind)
            scale = metric_norm(point, xi, kind) * metric_norm(point, eta, kind)
            worst_fiber = max(worst_fiber, abs(moved - ref) / scale)

        vnorm = metric_norm(point, vert, MetricKind.SCALED)
        pnorm = metric_norm(point, proj, MetricKind.SCALED)
        if vnorm > 0.0 and pnorm > 0.0:
            ortho = abs(metric(point, proj, vert, MetricKind.SCALED)) / (vnorm * pnorm)
            worst_orth = max(worst_orth, ortho)

    return [
        CheckResult("projection idempotence", worst_idem <= 1e-13, worst_idem, 1e-13),
        CheckResult("vertical vectors project to zero", worst_kernel <= 1e-13, worst_kernel, 1e-13),
        CheckResult("metric invariance along fibers", worst_fiber <= 1e-11, worst_fiber, 1e-11),
        CheckResult(
            "horizontal range orthogonal to vertical (scaled)", worst_orth <= 1e-12, worst_orth, 1e-12
        ),
    ]


def _random_problem(rng: np.random.Generator, max_n: int = 30, max_r: int = 4):
    n = int(rng.integers(10, max_n + 1))
    m = int(rng.integers(10, max_n + 1))
    r = int(rng.integers(1, min(max_r, n - 1, m - 1) + 1))
    # cap the sampling ratio so small instances stay feasible
    os_ratio = min(3.0, 0.6 * n * m / ((n + m - r) * r))
    spec = GenSpec(n, m, r, os_ratio=os_ratio, seed=int(rng.integers(0, 2**31)))
    prob, truth = generate_problem(spec)
    return spec, prob, truth


def calculus_suite(seed: int = 7) -> list[CheckResult]:
    """Gradient vs central differences, Hessian self-adjointness, and the
    analytic Hessian against the transported finite-difference operator.

    The finite-difference operator cannot see the connection term away from
    stationary points, so its comparison runs at exact-fit points where that
    term vanishes; self-adjointness is checked at generic points and does
    exercise the connection term.
    """
    rng = np.random.default_rng(seed)

    worst_grad = 0.0
    for _ in range(20):
        _, prob, truth = _random_problem(rng)
        point = _random_point_like(rng, truth)
        grad = riemannian_gradient(point, prob, MetricKind.SCALED)
        xi = _random_tangent(rng, point)
        xi = xi * (1.0 / _pair_norm(xi))
        value = metric(point, grad, xi, MetricKind.SCALED)
        h = 1e-6
        fd = (cost(retract(point, xi, h), prob) - cost(retract(point, xi, -h), prob)) / (2.0 * h)
        worst_grad = max(worst_grad, abs(value - fd) / (1.0 + abs(value)))

    worst_sym = 0.0
    for _ in range(10):
        _, prob, truth = _random_problem(rng)
        point = _random_point_like(rng, truth)
        eta = project_horizontal(point, _random_tangent(rng, point))
        xi = project_horizontal(point, _random_tangent(rng, point))
        eta = eta * (1.0 / metric_norm(point, eta, MetricKind.SCALED))
        xi = xi * (1.0 / metric_norm(point, xi, MetricKind.SCALED))
        h_eta = hessian_vec(point, prob, eta)
        h_xi = hessian_vec(point, prob, xi)
        a = metric(point, h_eta, xi, MetricKind.SCALED)
        b = metric(point, eta, h_xi, MetricKind.SCALED)
        scale = max(abs(a), abs(b), metric_norm(point, h_eta, MetricKind.SCALED))
        worst_sym = max(worst_sym, abs(a - b) / scale)

    worst_fd = 0.0
    for _ in range(10):
        _, prob, truth = _random_problem(rng)
        eta = project_horizontal(truth, _random_tangent(rng, truth))
        analytic = hessian_vec(truth, prob, eta)
        approx = fd_hessian_vec(truth, prob, eta, MetricKind.SCALED)
        worst_fd = max(worst_fd, _pair_norm(analytic - approx) / _pair_norm(analytic))

    return [
        CheckResult("gradient matches central differences", worst_grad <= 1e-6, worst_grad, 1e-6),
        CheckResult("hessian self-adjoint in scaled metric", worst_sym <= 1e-10, worst_sym, 1e-10),
        CheckResult(
            "hessian matches finite-difference fallback", worst_fd <= 1e-5, worst_fd, 1e-5
        ),
    ]


def _random_point_like(rng: np.random.Generator, like: FactorPair) -> FactorPair:
    return FactorPair(
        rng.standard_normal(like.G.shape), rng.standard_normal(like.H.shape)
    )


def run_all_checks(seed: int = 2024) -> list[CheckResult]:
    return geometry_invariant_suite(seed=seed) + calculus_suite(seed=seed + 1)
