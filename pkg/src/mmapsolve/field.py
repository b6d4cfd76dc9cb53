"""Analytic ingredients: the magnetic field, manufactured solution and forcing.

All functions accept scalars or broadcastable numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateFieldError

PI = np.pi


@dataclass(frozen=True)
class FieldParams:
    eps: float
    beta: float = 0.0
    m: int = 4

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")


@dataclass(frozen=True)
class UnitField:
    b1: np.ndarray
    b2: np.ndarray

    @property
    def b11(self):
        return self.b1 * self.b1

    @property
    def b12(self):
        return self.b1 * self.b2

    @property
    def b21(self):
        return self.b2 * self.b1

    @property
    def b22(self):
        return self.b2 * self.b2


def _raw_field(x, z, beta):
    B1 = PI * beta * (x * x - x) * np.sin(PI * z)
    B2 = beta * (2 * x - 1) * np.cos(PI * z) + PI
    return B1, B2


def magnetic_field(x, z, beta: float) -> UnitField:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    B1, B2 = _raw_field(x, z, beta)
    norm = np.hypot(B1, B2)
    if np.any(norm == 0):
        raise DegenerateFieldError(f"|B| vanishes for beta={beta}")
    return UnitField(B1 / norm, B2 / norm)


def _theta(x, z, beta):
    """Field-line label: constant along every line of the field."""
    th = PI * x + beta * (x * x - x) * np.cos(PI * z)
    th_x = PI + beta * (2 * x - 1) * np.cos(PI * z)
    th_z = -PI * beta * (x * x - x) * np.sin(PI * z)
    th_xx = 2 * beta * np.cos(PI * z)
    th_zz = -PI**2 * beta * (x * x - x) * np.cos(PI * z)
    return th, th_x, th_z, th_xx, th_zz


def phi_exact(x, z, p: FieldParams):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    th = _theta(x, z, p.beta)[0]
    return np.sin(p.m * th) + p.eps * np.cos(2 * PI * z) * np.sin(PI * x)


def tensor_and_divergence(x, z, beta: float):
    """Entries of b (x) b and the divergence of that tensor (row-wise).

    Returns ``(M11, M12, M22, div_x, div_z)`` with
    ``div_x = d_x M11 + d_z M21`` and ``div_z = d_x M12 + d_z M22``.
    """
    B1, B2 = _raw_field(x, z, beta)
    sz, cz = np.sin(PI * z), np.cos(PI * z)
    dB1_dx = PI * beta * (2 * x - 1) * sz
    dB1_dz = PI**2 * beta * (x * x - x) * cz
    dB2_dx = 2 * beta * cz
    dB2_dz = -PI * beta * (2 * x - 1) * sz

    s = B1 * B1 + B2 * B2
    ds_dx = 2 * (B1 * dB1_dx + B2 * dB2_dx)
    ds_dz = 2 * (B1 * dB1_dz + B2 * dB2_dz)

    def d(Bi, Bj, dBi, dBj, ds):
        return (dBi * Bj + Bi * dBj) / s - Bi * Bj * ds / s**2

    dM11_dx = d(B1, B1, dB1_dx, dB1_dx, ds_dx)
    dM12_dx = d(B1, B2, dB1_dx, dB2_dx, ds_dx)
    dM12_dz = d(B1, B2, dB1_dz, dB2_dz, ds_dz)
    dM22_dz = d(B2, B2, dB2_dz, dB2_dz, ds_dz)

    M11, M12, M22 = B1 * B1 / s, B1 * B2 / s, B2 * B2 / s
    return M11, M12, M22, dM11_dx + dM12_dz, dM12_dx + dM22_dz


def forcing_f(x, z, p: FieldParams):
    """Right-hand side making ``phi_exact`` solve the anisotropic problem.

    ``f = -Lap_perp(phi) - Lap_par(phi) / eps``. The ``sin(m theta)`` part of
    phi is constant along field lines, so only the ``eps * psi`` part feeds the
    parallel operator and the ``1/eps`` cancels analytically.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    eps, m = p.eps, p.m

    th, th_x, th_z, th_xx, th_zz = _theta(x, z, p.beta)
    lap_wave = -(m**2) * (th_x**2 + th_z**2) * np.sin(m * th) + m * np.cos(m * th) * (th_xx + th_zz)

    c2z, s2z = np.cos(2 * PI * z), np.sin(2 * PI * z)
    sx, cx = np.sin(PI * x), np.cos(PI * x)
    psi = c2z * sx
    psi_x = PI * c2z * cx
    psi_z = -2 * PI * s2z * sx
    psi_xx = -PI**2 * psi
    psi_zz = -4 * PI**2 * psi
    psi_xz = -2 * PI**2 * s2z * cx

    M11, M12, M22, div_x, div_z = tensor_and_divergence(x, z, p.beta)
    lap_par_psi = div_x * psi_x + div_z * psi_z + M11 * psi_xx + 2 * M12 * psi_xz + M22 * psi_zz

    lap_phi = lap_wave + eps * (psi_xx + psi_zz)
    # -Lap(phi) + Lap_par(phi) - Lap_par(phi)/eps with Lap_par(phi) = eps * Lap_par(psi)
    return -lap_phi + (eps - 1.0) * lap_par_psi
