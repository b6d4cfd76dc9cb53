"""Sparse and banded linear algebra kernel.

Matrices are ``scipy.sparse.csr_matrix`` objects kept in canonical form
(sorted column indices, no duplicates). Factorizations are banded: the band is
read off the actual sparsity pattern and handed to LAPACK (``?gbtrf`` with
partial pivoting inside the band, ``?pbtrf`` for Cholesky). Very wide bands
fall back to full dense LU.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp
from scipy.linalg import lapack

from .exceptions import (
    AssemblyError,
    NotSPDError,
    SingularDiagonalError,
    SingularFactorizationError,
)

PIVOT_RTOL = 1e-14
SYMMETRY_ATOL = 1e-12

Kind = Literal["lu", "cholesky"]


def canonical(A) -> sp.csr_matrix:
    A = sp.csr_matrix(A, dtype=float)
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble(n_rows: int, n_cols: int, triplets) -> sp.csr_matrix:
    """Build a CSR matrix from ``(row, col, value)`` triplets, summing duplicates.

    ``triplets`` is either an iterable of 3-tuples or a 3-tuple of arrays.
    Indices are 0-based.
    """
    if isinstance(triplets, tuple) and len(triplets) == 3 and np.ndim(triplets[0]) == 1:
        rows, cols, vals = (np.asarray(t) for t in triplets)
    else:
        trip = list(triplets)
        if trip:
            rows, cols, vals = (np.asarray(t) for t in zip(*trip))
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
    rows = rows.astype(np.int64, copy=False)
    cols = cols.astype(np.int64, copy=False)
    if rows.size and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
        raise AssemblyError(f"triplet index outside {n_rows}x{n_cols}")
    A = sp.coo_matrix((vals.astype(float), (rows, cols)), shape=(n_rows, n_cols))
    return canonical(A)


def spmv(A, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != A.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A @ x


def add_scaled(A, alpha: float, B) -> sp.csr_matrix:
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return canonical(A + alpha * B)


def _row_selector(n: int, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64).ravel()
    if rows.size and (rows.min() < 0 or rows.max() >= n):
        raise IndexError(f"row index outside 0..{n - 1}")
    mask = np.zeros(n, dtype=bool)
    mask[rows] = True
    return mask


def replace_rows(A, rows, source) -> sp.csr_matrix:
    """Rows listed in ``rows`` come from ``source``; all others from ``A``."""
    if A.shape != source.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {source.shape}")
    mask = _row_selector(A.shape[0], rows)
    keep = sp.diags((~mask).astype(float))
    take = sp.diags(mask.astype(float))
    out = canonical(keep @ A + take @ source)
    out.eliminate_zeros()
    return out


def add_rows(A, rows, source) -> sp.csr_matrix:
    """Rows listed in ``rows`` become ``row(A) + row(source)``."""
    if A.shape != source.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {source.shape}")
    mask = _row_selector(A.shape[0], rows)
    return canonical(A + sp.diags(mask.astype(float)) @ source)


def triple_product_diag(A2, d: np.ndarray, B) -> sp.csr_matrix:
    """``A2 @ diag(d)^-1 @ B``."""
    d = np.asarray(d, dtype=float)
    if np.any(np.abs(d) <= 1e-300):
        raise SingularDiagonalError("diagonal has a zero entry")
    return canonical(A2 @ sp.diags(1.0 / d) @ B)


def bandwidth(A) -> tuple[int, int]:
    """(lower, upper) bandwidth of the stored nonzero pattern."""
    coo = sp.coo_matrix(A)
    nz = coo.data != 0
    if not nz.any():
        return 0, 0
    off = coo.row[nz].astype(np.int64) - coo.col[nz]
    return int(max(off.max(), 0)), int(max(-off.min(), 0))


def is_symmetric(A, atol: float = SYMMETRY_ATOL) -> bool:
    diff = A - A.T
    return diff.nnz == 0 or np.abs(diff.data).max() <= atol


@dataclass
class BandedFactorization:
    kind: str
    n: int
    kl: int
    ku: int
    factors: np.ndarray
    ipiv: np.ndarray | None = None
    dense: bool = False
    min_pivot: float = field(default=np.nan)

    @property
    def bandwidth(self) -> int:
        return max(self.kl, self.ku)

    def solve(self, r: np.ndarray, transpose: bool = False) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.shape[0] != self.n:
            raise ValueError(f"rhs length {r.shape[0]} != {self.n}")
        vec = r.ndim == 1
        b = r.reshape(self.n, -1)
        if self.dense:
            x = scipy.linalg.lu_solve((self.factors, self.ipiv), b, trans=1 if transpose else 0, check_finite=False)
        elif self.kind == "cholesky":
            x, info = lapack.dpbtrs(self.factors, b, lower=1)
            _check_info(info, "dpbtrs")
        else:
            x, info = lapack.dgbtrs(self.factors, self.kl, self.ku, b, self.ipiv, trans=1 if transpose else 0)
            _check_info(info, "dgbtrs")
        return x.ravel() if vec else x

    def to_dense(self) -> np.ndarray:
        """Recompose the factored matrix (small n only, for checks)."""
        eye = np.eye(self.n)
        if self.kind == "cholesky":
            L = np.zeros((self.n, self.n))
            for d in range(self.kl + 1):
                idx = np.arange(self.n - d)
                L[idx + d, idx] = self.factors[d, : self.n - d]
            return L @ L.T
        # A = inv(A^-1); solving against I is the cheapest generic route
        return np.linalg.inv(self.solve(eye))


def _check_info(info: int, name: str):
    if info < 0:
        raise ValueError(f"{name}: illegal argument {-info}")


def _dense_threshold(n: int, kl: int, ku: int) -> bool:
    return n <= 64 or (kl + ku + 1) > n // 3


def factorize(A, kind: Kind = "lu") -> BandedFactorization:
    A = canonical(A)
    n, m = A.shape
    if n != m:
        raise ValueError(f"square matrix required, got {A.shape}")
    scale = np.abs(A.data).max() if A.nnz else 0.0
    if scale == 0.0:
        raise SingularFactorizationError("zero matrix")
    kl, ku = bandwidth(A)
    coo = A.tocoo()

    if kind == "cholesky":
        if not is_symmetric(A, SYMMETRY_ATOL * max(1.0, scale)):
            raise NotSPDError("matrix is not symmetric")
        kd = kl
        ab = np.zeros((kd + 1, n), order="F")
        low = coo.row >= coo.col
        ab[coo.row[low] - coo.col[low], coo.col[low]] = coo.data[low]
        c, info = lapack.dpbtrf(ab, lower=1, overwrite_ab=1)
        if info > 0:
            raise NotSPDError(f"non-positive pivot at row {info - 1}")
        _check_info(info, "dpbtrf")
        pivots = c[0] ** 2
        if pivots.min() <= PIVOT_RTOL * scale:
            raise SingularFactorizationError(f"pivot {pivots.min():.3e} below {PIVOT_RTOL}*max|A|")
        return BandedFactorization("cholesky", n, kd, kd, c, min_pivot=float(pivots.min()))

    if kind != "lu":
        raise ValueError(f"unknown factorization kind {kind!r}")

    if _dense_threshold(n, kl, ku):
        with warnings.catch_warnings():
            # an exactly singular matrix is reported through the pivot check below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(A.toarray(), check_finite=False)
        diag = np.abs(np.diag(lu))
        fact = BandedFactorization("lu", n, n - 1, n - 1, lu, piv, dense=True, min_pivot=float(diag.min()))
    else:
        ab = np.zeros((2 * kl + ku + 1, n), order="F")
        ab[kl + ku + coo.row - coo.col, coo.col] = coo.data
        lu, ipiv, info = lapack.dgbtrf(ab, kl, ku, overwrite_ab=1)
        _check_info(info, "dgbtrf")
        diag = np.abs(lu[kl + ku])
        fact = BandedFactorization("lu", n, kl, ku, lu, ipiv, min_pivot=float(diag.min()))
    if not fact.min_pivot > PIVOT_RTOL * scale:
        raise SingularFactorizationError(f"pivot {fact.min_pivot:.3e} below {PIVOT_RTOL}*max|A|")
    return fact


def solve(F: BandedFactorization, r: np.ndarray, transpose: bool = False) -> np.ndarray:
    return F.solve(r, transpose=transpose)


class RowUpdatedFactorization:
    """Solver for a matrix that differs from a factored base in a few rows.

    ``M = base + P @ D`` where ``P`` selects ``rows`` and ``D`` holds the row
    differences. Solves go through the Woodbury identity with a dense
    ``k x k`` capacitance matrix, so dense replacement rows never enter a band.
    """

    def __init__(self, base: BandedFactorization, rows: Sequence[int], delta):
        self.base = base
        self.n = base.n
        self.rows = np.asarray(rows, dtype=np.int64)
        self.delta = sp.csr_matrix(delta)  # k x n
        k = self.rows.size
        P = np.zeros((self.n, k))
        P[self.rows, np.arange(k)] = 1.0
        self._SinvP = base.solve(P)
        cap = np.eye(k) + self.delta @ self._SinvP
        self._cap = scipy.linalg.lu_factor(cap, check_finite=False)
        piv = np.abs(np.diag(self._cap[0]))
        self.min_pivot = float(piv.min()) if k else np.inf
        if k and self.min_pivot <= PIVOT_RTOL * max(1.0, np.abs(cap).max()):
            raise SingularFactorizationError("capacitance matrix is singular")
        self._SinvT_DT = None
        self.kind = "lu"
        self.kl, self.ku = base.kl, base.ku

    @property
    def bandwidth(self) -> int:
        return self.base.bandwidth

    def solve(self, r: np.ndarray, transpose: bool = False) -> np.ndarray:
        if not transpose:
            y = self.base.solve(r)
            t = scipy.linalg.lu_solve(self._cap, self.delta @ y, check_finite=False)
            return y - self._SinvP @ t
        if self._SinvT_DT is None:
            self._SinvT_DT = self.base.solve(self.delta.T.toarray(), transpose=True)
        y = self.base.solve(r, transpose=True)
        t = scipy.linalg.lu_solve(self._cap, y[self.rows], trans=1, check_finite=False)
        return y - self._SinvT_DT @ t


def write_mtx(path, A, comment: str = "") -> Path:
    """Matrix Market export (coordinate, real, general). Vectors become n x 1."""
    path = Path(path)
    if not sp.issparse(A):
        A = sp.coo_matrix(np.asarray(A, dtype=float).reshape(len(A), -1))
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment, field="real", symmetry="general")
    return path


def read_mtx(path) -> sp.csr_matrix:
    return canonical(scipy.io.mmread(str(path)))
