"""Exact and approximate Schur complements of the block system.

All approximations share the interior rows ``A1 + eps B`` (except S1/S2, which
are built directly) and differ in how the rows on the bottom boundary z=0 are
closed:

======  ==========================================================
S1      non-AP discretization of ``-lap_par - eps lap_perp``
S2      ``A1 - A2 diag(A3)^-1 B``
S3      ``A1 + eps B``, bottom rows taken from S2
S4      ``A1 + eps B``, bottom rows taken from the exact complement
S5      S3 with bottom rows ``row(S1) + row(S3)``
S6      ``A1 + eps B`` with a Robin closure, aligned layout only (SPD)
exact   ``A1 - A2 A3^-1 B``, dense
======  ==========================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import sparse as sps
from .assembly import BlockSystem, assemble_nonap
from .exceptions import DenseSizeError, UnsupportedVariantError
from .grid import Case

DENSE_LIMIT = 5000


class SchurVariant(str, enum.Enum):
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"
    S4 = "s4"
    S5 = "s5"
    S6 = "s6"
    EXACT = "exact"


@dataclass
class SchurOperator:
    variant: SchurVariant
    matrix: sp.csr_matrix
    factorization: object
    meta: dict = field(default_factory=dict)

    def solve(self, r, transpose=False):
        return self.factorization.solve(r, transpose=transpose)


def _meta(sys: BlockSystem) -> dict:
    return {"eps": sys.params.eps, "beta": sys.params.beta, "case": sys.grid.case.value}


def _a3_factorization(sys: BlockSystem, a3_fact=None):
    if a3_fact is not None:
        return a3_fact
    return factorize_a3(sys)


def factorize_a3(sys: BlockSystem):
    kind = "cholesky" if sys.grid.case is Case.ALIGNED and sys.inflow and sps.is_symmetric(sys.A3) else "lu"
    return sps.factorize(sys.A3, kind)


def a1_plus_eps_b(sys: BlockSystem) -> sp.csr_matrix:
    return sps.add_scaled(sys.A1, sys.params.eps, sys.B)


# -- matrices -------------------------------------------------------------------

def exact_matrix(sys: BlockSystem, a3_fact=None, max_size: int = DENSE_LIMIT) -> np.ndarray:
    if sys.n > max_size:
        raise DenseSizeError(f"exact Schur complement refused for n={sys.n} > {max_size}")
    fact = _a3_factorization(sys, a3_fact)
    X = fact.solve(sys.B.toarray())
    return sys.A1.toarray() - sys.A2 @ X


def s2_matrix(sys: BlockSystem) -> sp.csr_matrix:
    return sps.add_scaled(sys.A1, -1.0, sps.triple_product_diag(sys.A2, sys.A3.diagonal(), sys.B))


def s3_matrix(sys: BlockSystem, s2=None) -> sp.csr_matrix:
    s2 = s2_matrix(sys) if s2 is None else s2
    return sps.replace_rows(a1_plus_eps_b(sys), sys.grid.bottom_rows, s2)


def exact_rows(sys: BlockSystem, rows, a3_fact=None) -> np.ndarray:
    """Rows ``e_r^T (A1 - A2 A3^-1 B)`` via one transpose solve per row."""
    fact = _a3_factorization(sys, a3_fact)
    rows = np.asarray(rows)
    rhs = sys.A2.T.tocsc()[:, rows].toarray()
    W = fact.solve(rhs, transpose=True)
    return sys.A1[rows].toarray() - (sys.B.T @ W).T


def _embed_rows(n: int, rows, dense_rows) -> sp.csr_matrix:
    out = sp.lil_matrix((n, n))
    out[rows] = dense_rows
    return sps.canonical(out)


def s4_matrix(sys: BlockSystem, a3_fact=None) -> sp.csr_matrix:
    rows = sys.grid.bottom_rows
    R = exact_rows(sys, rows, a3_fact)
    return sps.replace_rows(a1_plus_eps_b(sys), rows, _embed_rows(sys.n, rows, R))


def s5_matrix(sys: BlockSystem, s1=None, s3=None) -> sp.csr_matrix:
    s1 = assemble_nonap(sys.grid, sys.params) if s1 is None else s1
    s3 = s3_matrix(sys) if s3 is None else s3
    return sps.add_rows(s3, sys.grid.bottom_rows, s1)


def s6_matrix(sys: BlockSystem) -> sp.csr_matrix:
    grid = sys.grid
    if grid.case is not Case.ALIGNED:
        raise UnsupportedVariantError("S6 is only defined for the aligned layout")
    rows = grid.bottom_rows
    # phi - h d_z phi = 0 at z=0  ->  2 phi_{i,1} - phi_{i,2} = 0
    robin = sps.assemble(
        sys.n, sys.n,
        (np.concatenate([rows, rows]), np.concatenate([rows, rows + 1]),
         np.concatenate([np.full(rows.size, 2.0), np.full(rows.size, -1.0)])),
    )
    return sps.replace_rows(a1_plus_eps_b(sys), rows, robin)


# -- operators ------------------------------------------------------------------

def build_exact(sys: BlockSystem, a3_fact=None, max_size: int = DENSE_LIMIT) -> SchurOperator:
    E = exact_matrix(sys, a3_fact, max_size)
    mat = sps.canonical(E)
    return SchurOperator(SchurVariant.EXACT, mat, sps.factorize(mat, "lu"), _meta(sys))


def build_s1(sys: BlockSystem) -> SchurOperator:
    mat = assemble_nonap(sys.grid, sys.params)
    return SchurOperator(SchurVariant.S1, mat, sps.factorize(mat, "lu"), _meta(sys))


def build_s2(sys: BlockSystem) -> SchurOperator:
    mat = s2_matrix(sys)
    return SchurOperator(SchurVariant.S2, mat, sps.factorize(mat, "lu"), _meta(sys))


def build_s3(sys: BlockSystem) -> SchurOperator:
    mat = s3_matrix(sys)
    return SchurOperator(SchurVariant.S3, mat, sps.factorize(mat, "lu"), _meta(sys))


def build_s4(sys: BlockSystem, a3_fact=None) -> SchurOperator:
    """S4, factored as a low-rank row update of S3.

    The exact-complement rows are dense (the parallel Green's function spans
    whole field lines), so instead of a band that would swallow the matrix,
    S3 is factored and the bottom-row differences go through Woodbury.
    """
    rows = sys.grid.bottom_rows
    R = exact_rows(sys, rows, a3_fact)
    mat = sps.replace_rows(a1_plus_eps_b(sys), rows, _embed_rows(sys.n, rows, R))
    s3 = s3_matrix(sys)
    base = sps.factorize(s3, "lu")
    delta = sp.csr_matrix(R - s3[rows].toarray())
    fact = sps.RowUpdatedFactorization(base, rows, delta)
    return SchurOperator(SchurVariant.S4, mat, fact, _meta(sys))


def build_s5(sys: BlockSystem) -> SchurOperator:
    mat = s5_matrix(sys)
    return SchurOperator(SchurVariant.S5, mat, sps.factorize(mat, "lu"), _meta(sys))


def build_s6(sys: BlockSystem) -> SchurOperator:
    mat = s6_matrix(sys)
    return SchurOperator(SchurVariant.S6, mat, sps.factorize(mat, "cholesky"), _meta(sys))


def build_schur(variant, sys: BlockSystem, a3_fact=None) -> SchurOperator:
    variant = SchurVariant(variant)
    if variant is SchurVariant.EXACT:
        return build_exact(sys, a3_fact)
    if variant is SchurVariant.S4:
        return build_s4(sys, a3_fact)
    return {
        SchurVariant.S1: build_s1,
        SchurVariant.S2: build_s2,
        SchurVariant.S3: build_s3,
        SchurVariant.S5: build_s5,
        SchurVariant.S6: build_s6,
    }[variant](sys)


# -- closed forms for the aligned layout -----------------------------------------

def closed_form_a3_inverse(N: int) -> np.ndarray:
    """Inverse of the N x N column block ``a3`` of the aligned A3.

    ``a3^-1 = diag(1, C)`` with ``C[i, j] = min(i, j)``, i, j = 1..N-1.
    """
    k = np.arange(1, N)
    out = np.zeros((N, N))
    out[0, 0] = 1.0
    out[1:, 1:] = np.minimum.outer(k, k)
    return out


def a3_block(N: int) -> np.ndarray:
    """The N x N column block of the aligned A3 (inflow, after the j=2 trim)."""
    a = np.zeros((N, N))
    a[0, 0] = 1.0
    for r in range(1, N - 1):
        a[r, r] = 2.0
        a[r, r + 1] = -1.0
        if r > 1:
            a[r, r - 1] = -1.0
    a[N - 1, N - 2], a[N - 1, N - 1] = -1.0, 1.0
    return a


def closed_form_b1(n_z: int, eps: float) -> np.ndarray:
    b1 = np.zeros((n_z, n_z))
    b1[0, 1 : n_z - 1] = 1.0
    idx = np.arange(1, n_z - 1)
    b1[idx, idx] = eps
    return b1


def closed_form_a2a3invb(N: int, eps: float) -> sp.csr_matrix:
    """``-A2 A3^-1 B`` for the aligned layout with mesh parameter N.

    Equals ``kron(Tx, b1)`` where ``Tx`` is the x-coupling of B (2 on interior
    diagonal, -1 between interior neighbours) and ``b1`` has first row
    ``(0, 1, ..., 1, 0)`` and ``eps`` on the remaining interior diagonal.
    """
    n_x, n_z = N, N + 1
    Tx = np.zeros((n_x, n_x))
    for i in range(1, n_x - 1):
        Tx[i, i] = 2.0
        if i > 1:
            Tx[i, i - 1] = -1.0
        if i < n_x - 2:
            Tx[i, i + 1] = -1.0
    return sps.canonical(sp.kron(Tx, closed_form_b1(n_z, eps)))
