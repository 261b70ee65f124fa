"""Quotient geometry of rank-r factorizations X = G H^T.

Points live on the product of full-column-rank factor spaces; two pairs
(G, H) and (G M^{-1}, H M^T) represent the same matrix for any invertible
r-by-r M, so the effective search space is the set of such equivalence
classes.  The inner product used throughout weights each factor block by
the Gram matrix of the opposite factor, which scales gradient directions
the way a diagonal-Hessian preconditioner would for the completion cost.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DegeneratePointError, SingularGramError

__all__ = [
    "MetricKind",
    "FactorPair",
    "TangentVector",
    "H_TOL",
    "RANK_RTOL",
    "metric",
    "metric_norm",
    "compute_lambda",
    "project_horizontal",
    "retract",
    "transport",
    "connection_correction",
    "is_horizontal",
]

# Relative tolerance on the horizontality defect; r-by-r solves keep the
# defect near machine precision, the loose factor absorbs conditioning.
H_TOL = 1e-10

# Smallest Gram eigenvalue must exceed RANK_RTOL times the largest one.
RANK_RTOL = 1e-12


class MetricKind(enum.Enum):
    """Which factor-space inner product to use."""

    SCALED = "scaled"
    RIGHT_INVARIANT = "right-invariant"


def _as_factor(arr, name: str) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {out.shape}")
    return out


@dataclass(frozen=True, eq=False)
class FactorPair:
    """A point (G, H) with G of shape (n, r) and H of shape (m, r), both full column rank."""

    G: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        G = _as_factor(self.G, "G")
        H = _as_factor(self.H, "H")
        if G.shape[1] != H.shape[1]:
            raise ValueError(f"factor column counts differ: {G.shape[1]} vs {H.shape[1]}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)
        for name, gram in (("G", self.gram_G), ("H", self.gram_H)):
            w = np.linalg.eigvalsh(gram)
            if w[-1] <= 0.0 or w[0] <= RANK_RTOL * w[-1]:
                raise DegeneratePointError(
                    f"factor {name} is rank deficient (Gram eig range [{w[0]:.3e}, {w[-1]:.3e}])"
                )

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def r(self) -> int:
        return self.G.shape[1]

    @cached_property
    def gram_G(self) -> np.ndarray:
        return self.G.T @ self.G

    @cached_property
    def gram_H(self) -> np.ndarray:
        return self.H.T @ self.H

    @cached_property
    def _cho_G(self):
        return _cho(self.gram_G, "G^T G")

    @cached_property
    def _cho_H(self):
        return _cho(self.gram_H, "H^T H")

    def solve_gram_G(self, B: np.ndarray) -> np.ndarray:
        """Solve (G^T G) X = B via the cached Cholesky factor."""
        return cho_solve(self._cho_G, B)

    def solve_gram_H(self, B: np.ndarray) -> np.ndarray:
        """Solve (H^T H) X = B via the cached Cholesky factor."""
        return cho_solve(self._cho_H, B)

    def rsolve_gram_G(self, B: np.ndarray) -> np.ndarray:
        """Return B (G^T G)^{-1} without forming the inverse."""
        return cho_solve(self._cho_G, B.T).T

    def rsolve_gram_H(self, B: np.ndarray) -> np.ndarray:
        """Return B (H^T H)^{-1} without forming the inverse."""
        return cho_solve(self._cho_H, B.T).T


def _cho(gram: np.ndarray, label: str):
    try:
        return cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError(f"{label} is numerically singular") from exc


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A direction (zG, zH) shaped like the factors of its base point."""

    zG: np.ndarray
    zH: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "zG", _as_factor(self.zG, "zG"))
        object.__setattr__(self, "zH", _as_factor(self.zH, "zH"))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.zG + other.zG, self.zH + other.zH)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.zG - other.zG, self.zH - other.zH)

    def __neg__(self) -> "TangentVector":
        return TangentVector(-self.zG, -self.zH)

    def __mul__(self, scalar: float) -> "TangentVector":
        return TangentVector(self.zG * scalar, self.zH * scalar)

    __rmul__ = __mul__

    def frobenius_norm(self) -> float:
        """Euclidean norm of the stacked pair, ignoring any metric weighting."""
        return float(np.sqrt(np.sum(self.zG * self.zG) + np.sum(self.zH * self.zH)))

    @classmethod
    def zero_like(cls, point: FactorPair) -> "TangentVector":
        return cls(np.zeros_like(point.G), np.zeros_like(point.H))


def _check_shapes(point: FactorPair, vec: TangentVector, name: str = "vector") -> None:
    if vec.zG.shape != point.G.shape or vec.zH.shape != point.H.shape:
        raise ValueError(
            f"{name} shapes {vec.zG.shape}/{vec.zH.shape} do not match point "
            f"{point.G.shape}/{point.H.shape}"
        )


def metric(
    point: FactorPair,
    xi: TangentVector,
    eta: TangentVector,
    kind: MetricKind = MetricKind.SCALED,
) -> float:
    """Inner product of two tangent vectors at a point.

    Scaled:          Tr((H^T H) zG_xi^T zG_eta) + Tr((G^T G) zH_xi^T zH_eta)
    Right-invariant: Tr((G^T G)^{-1} zG_xi^T zG_eta) + Tr((H^T H)^{-1} zH_xi^T zH_eta)
    """
    _check_shapes(point, xi, "xi")
    _check_shapes(point, eta, "eta")
    if kind is MetricKind.SCALED:
        g_part = np.sum((xi.zG @ point.gram_H) * eta.zG)
        h_part = np.sum((xi.zH @ point.gram_G) * eta.zH)
    else:
        g_part = np.sum(point.rsolve_gram_G(xi.zG) * eta.zG)
        h_part = np.sum(point.rsolve_gram_H(xi.zH) * eta.zH)
    return float(g_part + h_part)


def metric_norm(point: FactorPair, xi: TangentVector, kind: MetricKind = MetricKind.SCALED) -> float:
    sq = metric(point, xi, xi, kind)
    # roundoff can leave a tiny negative for near-zero vectors
    return float(np.sqrt(max(sq, 0.0)))


def compute_lambda(point: FactorPair, eta: TangentVector) -> np.ndarray:
    """The r-by-r multiplier 0.5 [zH^T H (H^T H)^{-1} - (G^T G)^{-1} G^T zG].

    Vanishes exactly on horizontal vectors; equals the generator on vertical
    vectors of the form (-G L, H L^T).
    """
    _check_shapes(point, eta, "eta")
    term_h = point.rsolve_gram_H(eta.zH.T @ point.H)
    term_g = point.solve_gram_G(point.G.T @ eta.zG)
    return 0.5 * (term_h - term_g)


def project_horizontal(point: FactorPair, eta: TangentVector) -> TangentVector:
    """Orthogonal projection (in the scaled metric) onto the horizontal space.

    Adds the vertical correction (G L, -H L^T) with L from compute_lambda;
    the result satisfies G^T zG (H^T H) = (G^T G) zH^T H up to roundoff.
    """
    lam = compute_lambda(point, eta)
    return TangentVector(eta.zG + point.G @ lam, eta.zH - point.H @ lam.T)


def retract(point: FactorPair, eta: TangentVector, step: float = 1.0) -> FactorPair:
    """Move to (G + step zG, H + step zH); raises DegeneratePointError on rank loss."""
    _check_shapes(point, eta, "eta")
    return FactorPair(point.G + step * eta.zG, point.H + step * eta.zH)


def transport(from_point: FactorPair, to_point: FactorPair, xi: TangentVector) -> TangentVector:
    """Carry a tangent vector to another point by horizontal projection there."""
    _check_shapes(from_point, xi, "xi")
    return project_horizontal(to_point, xi)


def _sym(Z: np.ndarray) -> np.ndarray:
    return 0.5 * (Z + Z.T)


def connection_correction(point: FactorPair, eta: TangentVector, xi: TangentVector) -> TangentVector:
    """Correction term turning a directional derivative into a covariant one.

    Bilinear and symmetric in (eta, xi).  The G block is

        zG_xi Sym(zH_eta^T H)(H^T H)^{-1} + zG_eta Sym(zH_xi^T H)(H^T H)^{-1}
        - G Sym(zH_xi^T zH_eta)(H^T H)^{-1}

    and the H block swaps the roles of the factors.
    """
    _check_shapes(point, eta, "eta")
    _check_shapes(point, xi, "xi")
    G, H = point.G, point.H
    a_g = point.rsolve_gram_H(
        xi.zG @ _sym(eta.zH.T @ H) + eta.zG @ _sym(xi.zH.T @ H) - G @ _sym(xi.zH.T @ eta.zH)
    )
    a_h = point.rsolve_gram_G(
        xi.zH @ _sym(eta.zG.T @ G) + eta.zH @ _sym(xi.zG.T @ G) - H @ _sym(xi.zG.T @ eta.zG)
    )
    return TangentVector(a_g, a_h)


def horizontality_defect(point: FactorPair, xi: TangentVector) -> tuple[float, float]:
    """Return (defect, scale) for the horizontality condition at a point."""
    _check_shapes(point, xi, "xi")
    G, H = point.G, point.H
    lhs = (G.T @ xi.zG) @ point.gram_H
    rhs = point.gram_G @ (xi.zH.T @ H)
    defect = float(np.linalg.norm(lhs - rhs))
    ng, nh = np.linalg.norm(G), np.linalg.norm(H)
    scale = float(ng * np.linalg.norm(xi.zG) * nh**2 + ng**2 * np.linalg.norm(xi.zH) * nh)
    return defect, scale


def is_horizontal(point: FactorPair, xi: TangentVector, tol: float = H_TOL) -> bool:
    """True when the normalized horizontality defect is at most tol."""
    defect, scale = horizontality_defect(point, xi)
    return defect <= tol * scale
