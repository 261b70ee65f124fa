"""Completion cost, its gradients under both metrics, and the Hessian action.

The cost is the mean squared error over the observed support.  Its scaled
Riemannian gradient is (S H (H^T H)^{-1}, S^T G (G^T G)^{-1}) with S the
scaled sampled residual; under the right-invariant metric the Gram inverses
are replaced by Gram multiplications.  The Hessian-vector product is the
projected covariant derivative of the scaled gradient field and is provided
for the scaled metric only; a transported finite-difference fallback covers
cross-checks and the right-invariant trust-region baseline (the fallback
agrees with the analytic operator near stationary points, where the
connection term it cannot see is negligible).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    FactorPair,
    MetricKind,
    TangentVector,
    connection_correction,
    project_horizontal,
    retract,
    transport,
)
from .sampled import SampleSet, SparseResidual, residual, sampled_product, sp_times_dense, spT_times_dense

__all__ = [
    "Problem",
    "cost",
    "euclidean_gradient",
    "riemannian_gradient",
    "hessian_vec",
    "fd_hessian_vec",
]


@dataclass(frozen=True, eq=False)
class Problem:
    """A completion instance: training support, target rank, optional held-out support."""

    omega: SampleSet
    rank: int
    omega_test: SampleSet | None = None

    def __post_init__(self):
        if self.rank < 1 or self.rank > min(self.omega.n_rows, self.omega.n_cols):
            raise ValueError(f"rank {self.rank} out of range for {self.omega.n_rows}x{self.omega.n_cols}")
        if self.omega.nnz == 0:
            raise ValueError("training support must be nonempty")
        if self.omega_test is not None:
            t = self.omega_test
            if (t.n_rows, t.n_cols) != (self.omega.n_rows, self.omega.n_cols):
                raise ValueError("held-out support has mismatched dimensions")
            train_keys = self.omega.rows * np.int64(self.omega.n_cols) + self.omega.cols
            test_keys = t.rows * np.int64(t.n_cols) + t.cols
            if np.intersect1d(train_keys, test_keys).size:
                raise ValueError("training and held-out supports must be disjoint")

    @property
    def n_rows(self) -> int:
        return self.omega.n_rows

    @property
    def n_cols(self) -> int:
        return self.omega.n_cols


def _check_point(point: FactorPair, prob: Problem) -> None:
    if point.n != prob.n_rows or point.m != prob.n_cols:
        raise ValueError(
            f"point dimensions ({point.n}, {point.m}) do not match problem "
            f"({prob.n_rows}, {prob.n_cols})"
        )


def cost(point: FactorPair, prob: Problem) -> float:
    """Mean squared error of G H^T against the observed entries."""
    _check_point(point, prob)
    diff = sampled_product(point.G, point.H, prob.omega) - prob.omega.values
    return float(diff @ diff) / prob.omega.nnz


def euclidean_gradient(point: FactorPair, prob: Problem) -> TangentVector:
    """Partial derivatives (S H, S^T G); not horizontal."""
    _check_point(point, prob)
    S = residual(point, prob.omega)
    return TangentVector(sp_times_dense(S, point.H), spT_times_dense(S, point.G))


def _scaled_direction(point: FactorPair, S: SparseResidual) -> tuple[np.ndarray, np.ndarray]:
    # Shared by the scaled gradient and the Gauss-Seidel/LMaFit updates so the
    # per-iterate identities between them hold to roundoff.
    return (
        point.rsolve_gram_H(sp_times_dense(S, point.H)),
        point.rsolve_gram_G(spT_times_dense(S, point.G)),
    )


def riemannian_gradient(
    point: FactorPair, prob: Problem, kind: MetricKind = MetricKind.SCALED
) -> TangentVector:
    """Gradient of the cost in the requested metric, horizontally projected.

    The scaled-metric direction is analytically horizontal already; the
    projection only scrubs roundoff drift.
    """
    _check_point(point, prob)
    S = residual(point, prob.omega)
    if kind is MetricKind.SCALED:
        dG, dH = _scaled_direction(point, S)
    else:
        dG = sp_times_dense(S, point.H) @ point.gram_G
        dH = spT_times_dense(S, point.G) @ point.gram_H
    return project_horizontal(point, TangentVector(dG, dH))


def _hessian_apply(
    point: FactorPair,
    prob: Problem,
    eta: TangentVector,
    S: SparseResidual,
    grad: TangentVector,
) -> TangentVector:
    # Shared core taking the residual and the (unprojected) scaled gradient
    # at the point, so trust-region inner iterations reuse them.
    G, H = point.G, point.H
    omega = prob.omega
    sprime_vals = (2.0 / omega.nnz) * (
        sampled_product(eta.zG, H, omega) + sampled_product(G, eta.zH, omega)
    )
    Sp = SparseResidual.on_support(omega, sprime_vals)

    sym_h = eta.zH.T @ H
    sym_h = sym_h + sym_h.T
    sym_g = eta.zG.T @ G
    sym_g = sym_g + sym_g.T
    dgrad_G = point.rsolve_gram_H(sp_times_dense(Sp, H) + sp_times_dense(S, eta.zH) - grad.zG @ sym_h)
    dgrad_H = point.rsolve_gram_G(spT_times_dense(Sp, G) + spT_times_dense(S, eta.zG) - grad.zH @ sym_g)

    corr = connection_correction(point, eta, grad)
    return project_horizontal(point, TangentVector(dgrad_G + corr.zG, dgrad_H + corr.zH))


def hessian_vec(point: FactorPair, prob: Problem, eta: TangentVector) -> TangentVector:
    """Riemannian Hessian of the cost applied to a horizontal direction (scaled metric).

    Computes the exact directional derivative of the scaled gradient field by
    the product rule, adds the connection correction against the gradient,
    and projects the sum.
    """
    _check_point(point, prob)
    S = residual(point, prob.omega)
    grad = TangentVector(
        point.rsolve_gram_H(sp_times_dense(S, point.H)),
        point.rsolve_gram_G(spT_times_dense(S, point.G)),
    )
    return _hessian_apply(point, prob, eta, S, grad)


def fd_hessian_vec(
    point: FactorPair,
    prob: Problem,
    eta: TangentVector,
    kind: MetricKind = MetricKind.SCALED,
) -> TangentVector:
    """Central difference of transported gradients along eta.

    Step size 1e-6 * |point| / |eta| in the plain pair norm.  Used to
    cross-check hessian_vec and as the Hessian operator for the
    right-invariant trust-region baseline.
    """
    _check_point(point, prob)
    eta_norm = eta.frobenius_norm()
    if eta_norm == 0.0:
        return TangentVector.zero_like(point)
    point_norm = float(np.sqrt(np.sum(point.G**2) + np.sum(point.H**2)))
    h = 1e-6 * point_norm / eta_norm
    x_plus = retract(point, eta, h)
    x_minus = retract(point, eta, -h)
    g_plus = transport(x_plus, point, riemannian_gradient(x_plus, prob, kind))
    g_minus = transport(x_minus, point, riemannian_gradient(x_minus, prob, kind))
    return (g_plus - g_minus) * (0.5 / h)
