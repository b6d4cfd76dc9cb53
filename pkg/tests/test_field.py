import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmapsolve.exceptions import DegenerateFieldError
from mmapsolve.field import FieldParams, forcing_f, magnetic_field, phi_exact, tensor_and_divergence

PI = np.pi
unit = st.floats(0.0, 1.0)


@given(unit, unit, st.floats(0.0, 3.0))
def test_unit_field_is_normalized(x, z, beta):
    b = magnetic_field(x, z, beta)
    assert b.b1**2 + b.b2**2 == pytest.approx(1.0, abs=1e-14)
    assert b.b11 + b.b22 == pytest.approx(1.0, abs=1e-14)
    assert b.b12 == b.b21


def test_field_examples():
    b = magnetic_field(0.3, 0.7, 0.0)
    assert (b.b1, b.b2) == (0.0, 1.0)
    b = magnetic_field(0.5, 0.0, 2.0)
    assert b.b1 == pytest.approx(0.0, abs=1e-15) and b.b2 == pytest.approx(1.0)
    # B = (2 pi (-0.25), pi) = (-pi/2, pi)
    b = magnetic_field(0.5, 0.5, 2.0)
    assert b.b1 == pytest.approx(-1 / np.sqrt(5)) and b.b2 == pytest.approx(2 / np.sqrt(5))


def test_vanishing_field_is_rejected():
    # B = 0 needs beta*cos(pi z)*(2x-1) = -pi, e.g. x=0, z=0, beta=pi
    with pytest.raises(DegenerateFieldError):
        magnetic_field(0.0, 0.0, PI)


def test_params_validation():
    with pytest.raises(ValueError):
        FieldParams(0.0)
    with pytest.raises(ValueError):
        FieldParams(1.0, beta=-1)
    with pytest.raises(ValueError):
        FieldParams(1.0, m=0)


@given(unit, st.floats(0.0, 2.0), st.floats(1e-20, 1.0))
def test_phi_vanishes_on_the_x_sides(z, beta, eps):
    p = FieldParams(eps, beta, 4)
    assert phi_exact(0.0, z, p) == pytest.approx(0.0, abs=1e-14)
    assert phi_exact(1.0, z, p) == pytest.approx(0.0, abs=1e-14)


def test_phi_hand_value():
    assert phi_exact(0.5, 0.5, FieldParams(1.0, 2.0, 4)) == pytest.approx(-1.0, abs=1e-14)


def test_phi_is_constant_along_field_lines_at_leading_order():
    # the eps-free part depends on x, z only through the field-line label
    p = FieldParams(1e-30, 2.0)
    x, z = 0.37, 0.61
    b = magnetic_field(x, z, 2.0)
    d = 1e-6
    g = (phi_exact(x + d * b.b1, z + d * b.b2, p) - phi_exact(x - d * b.b1, z - d * b.b2, p)) / (2 * d)
    assert abs(g) < 1e-8


def test_forcing_aligned_closed_form():
    p = FieldParams(1.0, 0.0, 4)
    x, z = np.meshgrid(np.linspace(0, 1, 7), np.linspace(0, 1, 5))
    expected = 16 * PI**2 * np.sin(4 * PI * x) + 5 * PI**2 * np.cos(2 * PI * z) * np.sin(PI * x)
    assert np.allclose(forcing_f(x, z, p), expected, atol=1e-10)
    assert forcing_f(0.25, 0.25, p) == pytest.approx(0.0, abs=1e-12)


def test_forcing_aligned_is_eps_uniform():
    # Lap_par(phi)/eps = -4 pi^2 cos(2 pi z) sin(pi x) for every eps
    x, z = 0.3, 0.2
    ref = 16 * PI**2 * np.sin(4 * PI * x) + PI**2 * np.cos(2 * PI * z) * np.sin(PI * x) * 4
    for eps in [1e-2, 1e-10, 1e-20]:
        f = forcing_f(x, z, FieldParams(eps, 0.0))
        assert f == pytest.approx(ref + eps * PI**2 * np.cos(2 * PI * z) * np.sin(PI * x), rel=1e-12)


# -- Richardson oracle --------------------------------------------------------

def _apply_operator(u, x, z, eps, beta, h):
    """-(div grad u) - (1/eps - 1) div(b b^T grad u) by nested central differences."""

    def grad(x, z):
        return ((u(x + h, z) - u(x - h, z)) / (2 * h), (u(x, z + h) - u(x, z - h)) / (2 * h))

    def flux(x, z):
        gx, gz = grad(x, z)
        M11, M12, M22, _, _ = tensor_and_divergence(x, z, beta)
        par = (M11 * gx + M12 * gz, M12 * gx + M22 * gz)
        return gx, gz, par

    def div(fun_x, fun_z):
        return (fun_x(x + h, z) - fun_x(x - h, z)) / (2 * h) + (fun_z(x, z + h) - fun_z(x, z - h)) / (2 * h)

    lap = div(lambda a, c: flux(a, c)[0], lambda a, c: flux(a, c)[1])
    lap_par = div(lambda a, c: flux(a, c)[2][0], lambda a, c: flux(a, c)[2][1])
    return -lap - (1 / eps - 1) * lap_par


def _richardson(u, x, z, eps, beta, h0=1e-3):
    a = _apply_operator(u, x, z, eps, beta, h0)
    b = _apply_operator(u, x, z, eps, beta, h0 / 2)
    return (4 * b - a) / 3


LATTICE = np.arange(1, 18) / 18.0


@pytest.mark.parametrize("beta", [0.0, 2.0])
@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_forcing_matches_richardson_oracle(eps, beta):
    p = FieldParams(eps, beta, 4)
    X, Z = np.meshgrid(LATTICE, LATTICE, indexing="ij")
    oracle = _richardson(lambda x, z: phi_exact(x, z, p), X, Z, eps, beta)
    f = forcing_f(X, Z, p)
    assert np.max(np.abs(f - oracle)) / np.max(np.abs(oracle)) < 1e-6


@pytest.mark.parametrize("eps", [1e-6, 1e-10, 1e-20])
def test_small_eps_forcing_via_split_oracle(eps):
    # the 1/eps term cannot be differenced directly at small eps: check the
    # eps-independent pieces separately against the oracle at eps = 1
    beta = 2.0
    X, Z = np.meshgrid(LATTICE, LATTICE, indexing="ij")
    p = FieldParams(eps, beta)
    wave = lambda x, z: np.sin(4 * (PI * x + beta * (x * x - x) * np.cos(PI * z)))
    psi = lambda x, z: np.cos(2 * PI * z) * np.sin(PI * x)
    lap_wave = -_richardson(wave, X, Z, 1.0, beta)
    lap_psi = -_richardson(psi, X, Z, 1.0, beta)
    # -lap_par(psi) = (op_eps2 - op_eps1) with op_eps = -lap - (1/eps - 1) lap_par
    lap_par_psi = _richardson(psi, X, Z, 1.0, beta) - _richardson(psi, X, Z, 0.5, beta)
    expected = -lap_wave - eps * lap_psi + (eps - 1.0) * lap_par_psi
    f = forcing_f(X, Z, p)
    assert np.max(np.abs(f - expected)) / np.max(np.abs(expected)) < 1e-6
