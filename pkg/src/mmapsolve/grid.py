"""Structured meshes on the unit square and their index bookkeeping.

Two layouts are supported. The aligned layout staggers the z nodes by half a
cell so that the first and last rows straddle z=0 and z=1; the non-aligned
layout is a plain vertex grid. Unknowns are numbered z-first:
``lexico(i, j) = j + (i - 1) * n_z`` with 1-based ``i, j``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import InvalidGridError


class Case(str, enum.Enum):
    ALIGNED = "aligned"
    NONALIGNED = "nonaligned"


class BoundaryClass(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET_X = 1
    NEUMANN_BOTTOM = 2
    NEUMANN_TOP = 3


@dataclass(frozen=True)
class GridSpec:
    case: Case
    N: int
    n_x: int
    n_z: int
    h: float

    @property
    def size(self) -> int:
        return self.n_x * self.n_z

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n_x) * self.h

    @cached_property
    def z(self) -> np.ndarray:
        j = np.arange(1, self.n_z + 1)
        if self.case is Case.ALIGNED:
            return (j - 1.5) * self.h
        return (j - 1.0) * self.h

    def flat(self, i, j):
        """0-based storage index of the 1-based pair(s) ``(i, j)``."""
        return (np.asarray(j) - 1) + (np.asarray(i) - 1) * self.n_z

    @cached_property
    def labels(self) -> np.ndarray:
        """Boundary class of every unknown, in storage order."""
        lab = np.full((self.n_x, self.n_z), BoundaryClass.INTERIOR, dtype=np.int8)
        lab[:, 0] = BoundaryClass.NEUMANN_BOTTOM
        lab[:, -1] = BoundaryClass.NEUMANN_TOP
        # x-sides own the corners
        lab[0, :] = BoundaryClass.DIRICHLET_X
        lab[-1, :] = BoundaryClass.DIRICHLET_X
        lab.flags.writeable = False
        return lab.ravel()

    def rows_of(self, kind: BoundaryClass) -> np.ndarray:
        return np.flatnonzero(self.labels == kind)

    @property
    def bottom_rows(self) -> np.ndarray:
        return self.rows_of(BoundaryClass.NEUMANN_BOTTOM)

    @property
    def top_rows(self) -> np.ndarray:
        return self.rows_of(BoundaryClass.NEUMANN_TOP)

    @property
    def dirichlet_rows(self) -> np.ndarray:
        return self.rows_of(BoundaryClass.DIRICHLET_X)

    @property
    def interior_rows(self) -> np.ndarray:
        return self.rows_of(BoundaryClass.INTERIOR)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, z) of every unknown in storage order."""
        X, Z = np.meshgrid(self.x, self.z, indexing="ij")
        return X.ravel(), Z.ravel()


def make_grid(case: Case | str, N: int) -> GridSpec:
    case = Case(case)
    if int(N) != N or N < 4:
        raise InvalidGridError(f"mesh parameter N must be an integer >= 4, got {N!r}")
    N = int(N)
    if case is Case.ALIGNED:
        # dx = 1/(n_x - 1), dz = 1/(n_z - 2); both equal 1/(N - 1)
        return GridSpec(case, N, N, N + 1, 1.0 / (N - 1))
    return GridSpec(case, N, N, N, 1.0 / (N - 1))


def lexico(i: int, j: int, grid: GridSpec) -> int:
    if not (1 <= i <= grid.n_x and 1 <= j <= grid.n_z):
        raise IndexError(f"({i}, {j}) outside 1..{grid.n_x} x 1..{grid.n_z}")
    return j + (i - 1) * grid.n_z


def unlexico(k: int, grid: GridSpec) -> tuple[int, int]:
    if not 1 <= k <= grid.size:
        raise IndexError(f"flat index {k} outside 1..{grid.size}")
    i, j = divmod(k - 1, grid.n_z)
    return i + 1, j + 1


def classify(i: int, j: int, grid: GridSpec) -> BoundaryClass:
    if not (1 <= i <= grid.n_x and 1 <= j <= grid.n_z):
        raise IndexError(f"({i}, {j}) outside the grid")
    if i in (1, grid.n_x):
        return BoundaryClass.DIRICHLET_X
    if j == 1:
        return BoundaryClass.NEUMANN_BOTTOM
    if j == grid.n_z:
        return BoundaryClass.NEUMANN_TOP
    return BoundaryClass.INTERIOR
