"""Finite-difference assembly of the micro-macro block system.

The unknowns are ``(Q, Phi)``; the first block row holds the q-equations and
the second the phi-equations::

    [A3  B ] [Q  ]   [F]
    [A2  A1] [Phi] = [0]

Interior equations are scaled by h^2, boundary equations are left unscaled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import sparse as sps
from .field import FieldParams, forcing_f, magnetic_field
from .grid import Case, GridSpec

Stencil = dict  # (di, dj) -> coefficient array, one entry per target row


@dataclass(frozen=True)
class BlockSystem:
    A3: sp.csr_matrix
    B: sp.csr_matrix
    A2: sp.csr_matrix
    A1: sp.csr_matrix
    F: np.ndarray
    grid: GridSpec
    params: FieldParams
    inflow: bool = True

    @property
    def n(self) -> int:
        return self.grid.size

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([self.F, np.zeros(self.n)])

    def full_matrix(self) -> sp.csr_matrix:
        return sp.bmat([[self.A3, self.B], [self.A2, self.A1]], format="csr")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        q, phi = x[: self.n], x[self.n :]
        return np.concatenate([self.A3 @ q + self.B @ phi, self.A2 @ q + self.A1 @ phi])

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[: self.n], x[self.n :]


class _Triplets:
    def __init__(self, n: int):
        self.n = n
        self.rows, self.cols, self.vals = [], [], []

    def add(self, rows, cols, vals):
        rows, cols = np.broadcast_arrays(np.asarray(rows), np.asarray(cols))
        self.rows.append(rows.ravel())
        self.cols.append(cols.ravel())
        self.vals.append(np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).ravel())

    def stencil(self, grid: GridSpec, I, J, st: Stencil, scale=1.0):
        rows = grid.flat(I, J)
        for (di, dj), c in st.items():
            self.add(rows, grid.flat(I + di, J + dj), scale * np.asarray(c))

    def identity(self, rows):
        self.add(rows, rows, 1.0)

    def matrix(self) -> sp.csr_matrix:
        if not self.rows:
            return sp.csr_matrix((self.n, self.n))
        return sps.assemble(
            self.n, self.n, (np.concatenate(self.rows), np.concatenate(self.cols), np.concatenate(self.vals))
        )


def _combine(*terms) -> Stencil:
    """Linear combination of stencils: ``_combine((1.0, s1), (-eps, s2))``."""
    out: Stencil = {}
    for w, st in terms:
        for k, c in st.items():
            out[k] = out.get(k, 0.0) + w * np.asarray(c)
    return out


def _interior(grid: GridSpec):
    I, J = np.meshgrid(np.arange(2, grid.n_x), np.arange(2, grid.n_z), indexing="ij")
    return I.ravel(), J.ravel()


def _bottom(grid: GridSpec):
    I = np.arange(2, grid.n_x)
    return I, np.ones_like(I)


def _top(grid: GridSpec):
    I = np.arange(2, grid.n_x)
    return I, np.full_like(I, grid.n_z)


def build_rhs(grid: GridSpec, p: FieldParams) -> np.ndarray:
    F = np.zeros(grid.size)
    I, J = _interior(grid)
    F[grid.flat(I, J)] = grid.h**2 * forcing_f(grid.x[I - 1], grid.z[J - 1], p)
    return F


# -- aligned layout -----------------------------------------------------------

def _assemble_aligned(grid: GridSpec, p: FieldParams, inflow: bool) -> BlockSystem:
    if grid.case is not Case.ALIGNED:
        raise ValueError("aligned assembly needs an aligned grid")
    n, eps = grid.size, p.eps
    I, J = _interior(grid)
    Ib, Jb = _bottom(grid)
    It, Jt = _top(grid)
    dirichlet = grid.dirichlet_rows

    A3, B, A2, A1 = (_Triplets(n) for _ in range(4))

    # q-equations: -(d_zz q) - (d_xx phi) = f, with the one-sided trims that
    # make A3 and B symmetric (q_{i,1} = 0 and phi on x-sides are known zeros)
    rows = grid.flat(I, J)
    A3.add(rows, rows, 2.0)
    A3.add(rows, grid.flat(I, J + 1), -1.0)
    keep = (J > 2) if inflow else np.ones_like(J, dtype=bool)
    A3.add(rows[keep], grid.flat(I[keep], J[keep] - 1), -1.0)

    B.add(rows, rows, 2.0)
    left, right = I > 2, I < grid.n_x - 1
    B.add(rows[left], grid.flat(I[left] - 1, J[left]), -1.0)
    B.add(rows[right], grid.flat(I[right] + 1, J[right]), -1.0)

    A3.identity(dirichlet)
    if inflow:
        A3.identity(grid.flat(Ib, Jb))
    else:
        # d_z q = 0 at z=0 (no inflow): same two-point closure as the phi group
        A3.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb), 1.0)
        A3.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb + 1), -1.0)
    A3.add(grid.flat(It, Jt), grid.flat(It, Jt), 1.0)
    A3.add(grid.flat(It, Jt), grid.flat(It, Jt - 1), -1.0)

    # phi-equations: eps d_zz q - d_zz phi = 0
    A2.stencil(grid, I, J, {(0, -1): 1.0, (0, 0): -2.0, (0, 1): 1.0}, scale=eps)
    A1.stencil(grid, I, J, {(0, -1): -1.0, (0, 0): 2.0, (0, 1): -1.0})
    A1.identity(dirichlet)
    A1.add(grid.flat(It, Jt), grid.flat(It, Jt), 1.0)
    A1.add(grid.flat(It, Jt), grid.flat(It, Jt - 1), -1.0)
    A2.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb), 1.0)
    A2.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb + 1), -1.0)

    return BlockSystem(A3.matrix(), B.matrix(), A2.matrix(), A1.matrix(), build_rhs(grid, p), grid, p, inflow)


# -- non-aligned layout ---------------------------------------------------------

def _tensor(grid: GridSpec, x, z, beta):
    b = magnetic_field(x, z, beta)
    return b.b11, b.b12, b.b21, b.b22


def parallel_stencil(grid: GridSpec, I, J, beta: float) -> Stencil:
    """h^2 * discrete d_x G + d_z H with b (x) b sampled at half points."""
    h = grid.h
    x, z = grid.x[I - 1], grid.z[J - 1]
    e11, e12, _, _ = _tensor(grid, x + h / 2, z, beta)  # (i+1/2, j)
    w11, w12, _, _ = _tensor(grid, x - h / 2, z, beta)  # (i-1/2, j)
    _, _, n21, n22 = _tensor(grid, x, z + h / 2, beta)  # (i, j+1/2)
    _, _, s21, s22 = _tensor(grid, x, z - h / 2, beta)  # (i, j-1/2)

    st: Stencil = {}

    def put(di, dj, c):
        st[(di, dj)] = st.get((di, dj), 0.0) + c

    # + G_{i+1/2,j}
    put(1, 0, e11); put(0, 0, -e11)
    put(1, 1, e12 / 4); put(0, 1, e12 / 4); put(1, -1, -e12 / 4); put(0, -1, -e12 / 4)
    # - G_{i-1/2,j}
    put(0, 0, -w11); put(-1, 0, w11)
    put(0, 1, -w12 / 4); put(-1, 1, -w12 / 4); put(0, -1, w12 / 4); put(-1, -1, w12 / 4)
    # + H_{i,j+1/2}
    put(1, 1, n21 / 4); put(1, 0, n21 / 4); put(-1, 1, -n21 / 4); put(-1, 0, -n21 / 4)
    put(0, 1, n22); put(0, 0, -n22)
    # - H_{i,j-1/2}
    put(1, 0, -s21 / 4); put(1, -1, -s21 / 4); put(-1, 0, s21 / 4); put(-1, -1, s21 / 4)
    put(0, 0, -s22); put(0, -1, s22)
    return st


def laplace_stencil(I) -> Stencil:
    one = np.ones(np.shape(I))
    return {(1, 0): one, (-1, 0): one, (0, 1): one, (0, -1): one, (0, 0): -4 * one}


def _one_sided(side: str) -> dict:
    """h * d_z at a boundary row, second order: forward at z=0, backward at z=1."""
    if side == "bottom":
        return {0: -1.5, 1: 2.0, 2: -0.5}
    return {0: 1.5, -1: -2.0, -2: 0.5}


def boundary_parallel(grid: GridSpec, I, J, beta: float, side: str) -> Stencil:
    """h * n . grad_par with n = (0, 1): b21 d_x + b22 d_z."""
    _, _, b21, b22 = _tensor(grid, grid.x[I - 1], grid.z[J - 1], beta)
    st: Stencil = {(1, 0): b21 / 2, (-1, 0): -b21 / 2}
    for dj, c in _one_sided(side).items():
        st[(0, dj)] = st.get((0, dj), 0.0) + c * b22
    return st


def boundary_perp(grid: GridSpec, I, J, beta: float, side: str) -> Stencil:
    """h * n . grad_perp with n = (0, 1): b11 d_z - b12 d_x."""
    b11, b12, _, _ = _tensor(grid, grid.x[I - 1], grid.z[J - 1], beta)
    st: Stencil = {(1, 0): -b12 / 2, (-1, 0): b12 / 2}
    for dj, c in _one_sided(side).items():
        st[(0, dj)] = st.get((0, dj), 0.0) + c * b11
    return st


def _assemble_nonaligned(grid: GridSpec, p: FieldParams, inflow: bool) -> BlockSystem:
    if grid.case is not Case.NONALIGNED:
        raise ValueError("non-aligned assembly needs a non-aligned grid")
    n, eps, beta = grid.size, p.eps, p.beta
    I, J = _interior(grid)
    Ib, Jb = _bottom(grid)
    It, Jt = _top(grid)

    par = parallel_stencil(grid, I, J, beta)
    perp = _combine((1.0, laplace_stencil(I)), (-1.0, par))
    par_b = boundary_parallel(grid, Ib, Jb, beta, "bottom")
    perp_b = boundary_perp(grid, Ib, Jb, beta, "bottom")
    par_t = boundary_parallel(grid, It, Jt, beta, "top")
    perp_t = boundary_perp(grid, It, Jt, beta, "top")

    A3, B, A2, A1 = (_Triplets(n) for _ in range(4))

    # q-equations: -lap_par q - lap_perp phi = f
    A3.stencil(grid, I, J, par, scale=-1.0)
    B.stencil(grid, I, J, perp, scale=-1.0)
    A3.identity(grid.dirichlet_rows)
    if inflow:
        A3.identity(grid.flat(Ib, Jb))
    else:
        A3.stencil(grid, Ib, Jb, par_b)
        B.stencil(grid, Ib, Jb, perp_b)
    A3.stencil(grid, It, Jt, par_t)
    B.stencil(grid, It, Jt, perp_t)

    # phi-equations: eps lap_par q - lap_par phi = 0
    A2.stencil(grid, I, J, par, scale=eps)
    A1.stencil(grid, I, J, par, scale=-1.0)
    A1.identity(grid.dirichlet_rows)
    A2.stencil(grid, Ib, Jb, par_b)
    A1.stencil(grid, Ib, Jb, perp_b)
    A2.stencil(grid, It, Jt, par_t, scale=eps)
    A1.stencil(grid, It, Jt, par_t, scale=-1.0)

    return BlockSystem(A3.matrix(), B.matrix(), A2.matrix(), A1.matrix(), build_rhs(grid, p), grid, p, inflow)


def assemble_aligned(grid: GridSpec, p: FieldParams) -> BlockSystem:
    return _assemble_aligned(grid, p, inflow=True)


def assemble_nonaligned(grid: GridSpec, p: FieldParams) -> BlockSystem:
    return _assemble_nonaligned(grid, p, inflow=True)


def assemble_noinflow(grid: GridSpec, p: FieldParams) -> BlockSystem:
    """Same system with the q = 0 inflow rows swapped for the flux condition.

    The resulting A3 is singular. In the aligned layout the j=2 trim that relied
    on q_{i,1} = 0 is not applied.
    """
    if grid.case is Case.ALIGNED:
        return _assemble_aligned(grid, p, inflow=False)
    return _assemble_nonaligned(grid, p, inflow=False)


def assemble(grid: GridSpec, p: FieldParams, inflow: bool = True) -> BlockSystem:
    if not inflow:
        return assemble_noinflow(grid, p)
    if grid.case is Case.ALIGNED:
        return assemble_aligned(grid, p)
    return assemble_nonaligned(grid, p)


def with_inflow_blocks(sys_noinflow: BlockSystem) -> BlockSystem:
    """Companion system carrying the inflow A3/B used to build preconditioners."""
    ref = assemble(sys_noinflow.grid, sys_noinflow.params, inflow=True)
    return replace(sys_noinflow, A3=ref.A3, B=ref.B, inflow=True)


def assemble_nonap(grid: GridSpec, p: FieldParams) -> sp.csr_matrix:
    """Direct discretization of ``-lap_par - eps lap_perp`` (the S1 matrix).

    Interior rows are ``A1 + eps B`` of the matching MMAP assembly, x-sides
    carry phi = 0, and the z-boundaries close with
    ``n . grad_par phi + eps n . grad_perp phi = 0`` written with the same
    one-sided formulas (and sign) as the MMAP phi-group rows.
    """
    sysm = assemble(grid, p, inflow=True)
    base = sps.add_scaled(sysm.A1, p.eps, sysm.B)
    eps, n = p.eps, grid.size
    Ib, Jb = _bottom(grid)
    It, Jt = _top(grid)
    bnd = _Triplets(n)
    if grid.case is Case.ALIGNED:
        # n . grad_perp vanishes for b = (0, 1)
        bnd.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb), 1.0)
        bnd.add(grid.flat(Ib, Jb), grid.flat(Ib, Jb + 1), -1.0)
        bnd.add(grid.flat(It, Jt), grid.flat(It, Jt), 1.0)
        bnd.add(grid.flat(It, Jt), grid.flat(It, Jt - 1), -1.0)
    else:
        beta = p.beta
        bnd.stencil(grid, Ib, Jb, _combine(
            (1.0, boundary_parallel(grid, Ib, Jb, beta, "bottom")),
            (eps, boundary_perp(grid, Ib, Jb, beta, "bottom"))))
        # the phi-group top row is -n.grad_par phi; keep that orientation
        bnd.stencil(grid, It, Jt, _combine(
            (-1.0, boundary_parallel(grid, It, Jt, beta, "top")),
            (-eps, boundary_perp(grid, It, Jt, beta, "top"))))
    rows = np.concatenate([grid.flat(Ib, Jb), grid.flat(It, Jt)])
    return sps.replace_rows(base, rows, bnd.matrix())
