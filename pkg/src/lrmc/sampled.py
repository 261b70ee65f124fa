"""Sampling operator and sparse-times-dense kernels over the observed support.

Everything that scales with the number of observed entries lives here; the
rest of the package works with dense factors and r-by-r matrices only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .geometry import FactorPair

__all__ = [
    "SampleSet",
    "SparseResidual",
    "sampled_product",
    "residual",
    "sp_times_dense",
    "spT_times_dense",
]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observed entries of a partially known matrix, in canonical COO order.

    Index pairs are unique and stored row-major by (row, col), so every
    reduction over the support runs in one fixed order and repeated runs
    produce bit-identical results.  Arrays are read-only after construction;
    instances are safe to share across threads.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        rows = np.ascontiguousarray(self.rows, dtype=np.int64)
        cols = np.ascontiguousarray(self.cols, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if rows.ndim != 1 or rows.shape != cols.shape or rows.shape != values.shape:
            raise ValueError("rows, cols, values must be 1-d arrays of equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.n_rows:
                raise ValueError("row index out of range")
            if cols.min() < 0 or cols.max() >= self.n_cols:
                raise ValueError("column index out of range")
        key = rows * np.int64(self.n_cols) + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        if key.size > 1 and np.any(np.diff(key) == 0):
            raise ValueError("duplicate (row, col) pairs are not allowed")
        rows, cols, values = rows[order], cols[order], values[order]
        for arr in (rows, cols, values):
            arr.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)


@dataclass(frozen=True, eq=False)
class SparseResidual:
    """Values supported on the index set of an existing SampleSet.

    Shares the (already canonical) index arrays of the originating set by
    reference; only carries its own value array.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != self.rows.shape:
            raise ValueError("values length must match the index arrays")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def on_support(cls, omega: "SampleSet", values: np.ndarray) -> "SparseResidual":
        return cls(omega.n_rows, omega.n_cols, omega.rows, omega.cols, values)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)


SparseLike = Union[SampleSet, SparseResidual]


def _check_factor_dims(G: np.ndarray, H: np.ndarray, omega: SparseLike) -> None:
    if G.ndim != 2 or H.ndim != 2 or G.shape[1] != H.shape[1]:
        raise ValueError("factors must be 2-d with equal column counts")
    if G.shape[0] != omega.n_rows or H.shape[0] != omega.n_cols:
        raise ValueError(
            f"factor row counts ({G.shape[0]}, {H.shape[0]}) do not match "
            f"support dimensions ({omega.n_rows}, {omega.n_cols})"
        )


def sampled_product(G: np.ndarray, H: np.ndarray, omega: SparseLike) -> np.ndarray:
    """Entries of G H^T on the support, without forming the dense product."""
    G = np.asarray(G, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    _check_factor_dims(G, H, omega)
    return np.einsum("ij,ij->i", G[omega.rows], H[omega.cols])


def residual(point: FactorPair, omega: SampleSet) -> SparseResidual:
    """Scaled sampled residual (2/nnz) (P(G H^T) - P(X)) on the support."""
    if omega.nnz == 0:
        raise ValueError("residual undefined on an empty support")
    pred = sampled_product(point.G, point.H, omega)
    vals = (2.0 / omega.nnz) * (pred - omega.values)
    return SparseResidual.on_support(omega, vals)


def _scatter_rows(index: np.ndarray, weighted: np.ndarray, n_out: int) -> np.ndarray:
    # One bincount pass per column; bincount accumulates in array order,
    # which is the canonical support order, so reductions are deterministic.
    out = np.empty((n_out, weighted.shape[1]))
    for j in range(weighted.shape[1]):
        out[:, j] = np.bincount(index, weights=weighted[:, j], minlength=n_out)
    return out


def sp_times_dense(S: SparseLike, D: np.ndarray) -> np.ndarray:
    """Product S @ D of a support-sparse matrix with a dense (n_cols, r) matrix."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != S.n_cols:
        raise ValueError(f"dense operand must have {S.n_cols} rows, got shape {D.shape}")
    return _scatter_rows(S.rows, S.values[:, None] * D[S.cols], S.n_rows)


def spT_times_dense(S: SparseLike, D: np.ndarray) -> np.ndarray:
    """Product S^T @ D of a support-sparse matrix with a dense (n_rows, r) matrix."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != S.n_rows:
        raise ValueError(f"dense operand must have {S.n_rows} rows, got shape {D.shape}")
    return _scatter_rows(S.cols, S.values[:, None] * D[S.rows], S.n_cols)
