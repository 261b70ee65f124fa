"""Step-size selection along straight-line retractions.

The sampled squared error along (G + t zG)(H + t zH)^T is a quartic in t, so
the optimal step is found exactly from the real roots of a cubic.  Gradient
descent instead runs an Armijo backtracking search whose initial guess
adapts across iterations: the very first guess is the exact step, a trial
accepted immediately doubles the next guess, and a backtracked trial reuses
the accepted step.  (The adaptive rule is a reconstruction; only its intent
is documented upstream.)
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .cost import Problem, cost, riemannian_gradient
from .errors import DegeneratePointError, LinesearchFailureError
from .geometry import FactorPair, MetricKind, TangentVector, metric_norm, retract
from .sampled import sampled_product

__all__ = [
    "QuarticCoeffs",
    "LinesearchState",
    "quartic_coeffs",
    "cubic_real_roots",
    "exact_step",
    "armijo_adaptive",
    "initial_tr_radius",
    "ARMIJO_C1",
    "MAX_BACKTRACKS",
]

ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 50

def _degenerate_leading(lead: float, *rest: float) -> bool:
    # A leading coefficient only drops the polynomial degree when it is zero
    # or so small that monic normalization overflows.  A relative threshold
    # would misclassify genuine cubics whose coefficients span many orders of
    # magnitude, as happens along scaled-gradient directions whose optimal
    # step is large.
    if lead == 0.0:
        return True
    return any(not np.isfinite(c / lead) for c in rest)


@dataclass(frozen=True)
class QuarticCoeffs:
    """f(t) = a0 + a1 t + a2 t^2 + a3 t^3 + a4 t^4, with a0, a4 >= 0."""

    a0: float
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self):
        if self.a0 < 0.0 or self.a4 < 0.0:
            raise ValueError("a0 and a4 are squared norms and must be nonnegative")

    def value(self, t: float) -> float:
        return float((((self.a4 * t + self.a3) * t + self.a2) * t + self.a1) * t + self.a0)

    def derivative_coeffs(self) -> tuple[float, float, float, float]:
        """Leading-first coefficients (c3, c2, c1, c0) of f'."""
        return (4.0 * self.a4, 3.0 * self.a3, 2.0 * self.a2, self.a1)


def quartic_coeffs(
    point: FactorPair,
    eta: TangentVector,
    prob: Problem,
    misfit: np.ndarray | None = None,
) -> QuarticCoeffs:
    """Coefficients of the sampled squared error along the line through eta.

    With r0 the current sampled misfit, r1 the sampled first-order term
    zG H^T + G zH^T and r2 the sampled zG zH^T, the quartic is
    |r0 + t r1 + t^2 r2|^2.  This is nnz times the cost along the
    retraction, hence has the same minimizers.  Solvers that already hold
    the misfit at the point may pass it to skip one sampled product.
    """
    omega = prob.omega
    if misfit is None:
        misfit = sampled_product(point.G, point.H, omega) - omega.values
    r0 = misfit
    r1 = sampled_product(point.G, eta.zH, omega) + sampled_product(eta.zG, point.H, omega)
    r2 = sampled_product(eta.zG, eta.zH, omega)
    return QuarticCoeffs(
        a0=float(r0 @ r0),
        a1=2.0 * float(r0 @ r1),
        a2=float(r1 @ r1) + 2.0 * float(r0 @ r2),
        a3=2.0 * float(r1 @ r2),
        a4=float(r2 @ r2),
    )


def _quadratic_real_roots(c2: float, c1: float, c0: float) -> list[float]:
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        return []
    sq = float(np.sqrt(disc))
    q = -0.5 * (c1 + np.copysign(sq, c1 if c1 != 0.0 else 1.0))
    roots = []
    if q != 0.0:
        roots.append(q / c2)
        roots.append(c0 / q)
    else:
        # c1 == 0 and disc >= 0: symmetric pair
        roots.extend([sq / (2.0 * c2), -sq / (2.0 * c2)])
    return roots


def cubic_real_roots(c3: float, c2: float, c1: float, c0: float) -> list[float]:
    """All real roots of c3 t^3 + c2 t^2 + c1 t + c0, deduplicated and sorted.

    Roots come from the eigenvalues of the companion matrix with one Newton
    polish each; the degree degrades gracefully when leading coefficients
    vanish relative to the largest one.
    """
    coeffs = np.array([c3, c2, c1, c0], dtype=np.float64)
    maxc = float(np.max(np.abs(coeffs)))
    if maxc == 0.0:
        raise ValueError("all-zero polynomial has no well-defined root set")

    if _degenerate_leading(c3, c2, c1, c0):
        if _degenerate_leading(c2, c1, c0):
            if c1 == 0.0:
                return []
            candidates = [-c0 / c1]
        else:
            candidates = _quadratic_real_roots(c2, c1, c0)
    else:
        eigs = np.roots(coeffs)
        candidates = [float(z.real) for z in eigs if abs(z.imag) <= 1e-7 * (1.0 + abs(z.real))]

    def poly(t: float) -> float:
        return ((c3 * t + c2) * t + c1) * t + c0

    def dpoly(t: float) -> float:
        return (3.0 * c3 * t + 2.0 * c2) * t + c1

    polished = []
    for t in candidates:
        d = dpoly(t)
        if d != 0.0:
            step = poly(t) / d
            if np.isfinite(step):
                t = t - step
        polished.append(t)

    roots: list[float] = []
    for t in sorted(polished):
        if abs(poly(t)) > 1e-10 * maxc * max(1.0, abs(t) ** 3):
            continue
        if roots and abs(t - roots[-1]) <= 1e-8 * (1.0 + abs(t)):
            continue
        roots.append(t)
    return roots


def exact_step(
    point: FactorPair,
    eta: TangentVector,
    prob: Problem,
    positive_only: bool = False,
    misfit: np.ndarray | None = None,
) -> float:
    """Globally optimal step along eta, from the stationary points of the quartic.

    With positive_only (the descent-method mode) only strictly positive
    stationary points are candidates and LinesearchFailureError is raised if
    none exists.  Otherwise the global minimizer over all stationary points
    and t = 0 is returned, ties broken toward smaller |t|.
    """
    f = quartic_coeffs(point, eta, prob, misfit=misfit)
    d3, d2, d1, d0 = f.derivative_coeffs()
    if d3 == 0.0 and d2 == 0.0 and d1 == 0.0 and d0 == 0.0:
        return 0.0
    roots = cubic_real_roots(d3, d2, d1, d0)
    if positive_only:
        candidates = [t for t in roots if t > 0.0]
        if not candidates:
            raise LinesearchFailureError("no positive stationary step along the given direction")
    else:
        candidates = roots + [0.0]
    return min(candidates, key=lambda t: (f.value(t), abs(t), t))


@dataclass(frozen=True)
class LinesearchState:
    """Carries the next initial Armijo guess between iterations of one solver."""

    next_guess: float


def armijo_adaptive(
    state: LinesearchState,
    point: FactorPair,
    eta: TangentVector,
    prob: Problem,
    grad_metric_inner: float,
    base_cost: float | None = None,
) -> tuple[float, LinesearchState]:
    """Backtracking Armijo search with the adaptive initial guess policy.

    Requires grad_metric_inner = <eta, grad> < 0 in the solver's metric.
    Returns the accepted step and the state carrying the next guess.  A
    rank-degenerate trial point counts as a failed trial.
    """
    if not grad_metric_inner < 0.0:
        raise ValueError("eta must be a descent direction (negative metric inner product)")
    if not state.next_guess > 0.0 or not np.isfinite(state.next_guess):
        raise ValueError(f"initial guess must be positive and finite, got {state.next_guess}")
    base = cost(point, prob) if base_cost is None else base_cost
    s = state.next_guess
    for k in range(MAX_BACKTRACKS + 1):
        try:
            trial = cost(retract(point, eta, s), prob)
        except DegeneratePointError:
            trial = np.inf
        if trial <= base + ARMIJO_C1 * s * grad_metric_inner:
            next_guess = 2.0 * s if k == 0 else s
            return s, replace(state, next_guess=next_guess)
        s *= 0.5
    raise LinesearchFailureError(
        f"no Armijo step after {MAX_BACKTRACKS} halvings from {state.next_guess:.3e}"
    )


def initial_tr_radius(point0: FactorPair, prob: Problem) -> tuple[float, float]:
    """Initial and maximal trust-region radii (delta0, delta_max).

    delta0 is the exact step along the negative scaled gradient times that
    gradient's metric norm; the cap is 2^10 delta0.  A zero gradient yields
    (0, 0): the point is already stationary.
    """
    grad = riemannian_gradient(point0, prob, MetricKind.SCALED)
    gnorm = metric_norm(point0, grad, MetricKind.SCALED)
    if gnorm == 0.0:
        return 0.0, 0.0
    t0 = exact_step(point0, -grad, prob, positive_only=True)
    delta0 = t0 * gnorm
    return delta0, 1024.0 * delta0
