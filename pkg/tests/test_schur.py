import numpy as np
import pytest
import scipy.sparse as sp

from mmapsolve import schur as S
from mmapsolve import sparse as sps
from mmapsolve.assembly import assemble, assemble_nonap
from mmapsolve.exceptions import DenseSizeError, UnsupportedVariantError
from mmapsolve.field import FieldParams
from mmapsolve.grid import make_grid


def system(case, N, eps):
    return assemble(make_grid(case, N), FieldParams(eps, 0.0 if case == "aligned" else 2.0))


@pytest.mark.parametrize("N", [8, 10])
def test_closed_form_a3_inverse(N):
    a3 = S.a3_block(N)
    C = S.closed_form_a3_inverse(N)
    assert np.abs(a3 @ C - np.eye(N)).max() <= 1e-12
    assert np.abs(C - np.linalg.inv(a3)).max() <= 1e-11


def test_closed_form_min_table():
    assert np.array_equal(S.closed_form_a3_inverse(3)[1:, 1:], [[1, 1], [1, 2]])


def test_b1_display():
    b1 = S.closed_form_b1(9, 0.25)
    assert np.all(np.diag(b1)[1:8] == 0.25)
    z = S.closed_form_b1(9, 0.0)
    assert np.array_equal(z[0], [0, 1, 1, 1, 1, 1, 1, 1, 0]) and not np.any(z[1:])


@pytest.mark.parametrize("eps", [1.0, 1e-3])
def test_closed_form_triple_product(eps):
    s = system("aligned", 8, eps)
    dense = -(s.A2 @ np.linalg.solve(s.A3.toarray(), s.B.toarray()))
    assert np.abs(dense - S.closed_form_a2a3invb(8, eps).toarray()).max() <= 1e-12


@pytest.mark.parametrize("eps", [1.0, 1e-2, 1e-10])
def test_s4_equals_exact_aligned(eps):
    s = system("aligned", 8, eps)
    E = S.exact_matrix(s)
    assert np.abs(S.s4_matrix(s).toarray() - E).max() <= 1e-10


def test_s4_close_to_exact_nonaligned():
    s = system("nonaligned", 8, 1e-2)
    E = S.exact_matrix(s)
    assert np.abs(S.s4_matrix(s).toarray() - E).max() / np.abs(E).max() <= 1e-8


def test_exact_with_zero_b_is_a1():
    s = system("aligned", 6, 0.1)
    from dataclasses import replace

    z = replace(s, B=sp.csr_matrix(s.B.shape))
    assert np.array_equal(S.exact_matrix(z), s.A1.toarray())


def test_exact_size_guard():
    s = system("aligned", 16, 1.0)
    with pytest.raises(DenseSizeError):
        S.exact_matrix(s, max_size=100)


def test_s3_touches_only_bottom_rows():
    s = system("nonaligned", 12, 1e-2)
    s3 = S.s3_matrix(s)
    base = S.a1_plus_eps_b(s)
    changed = np.unique((s3 != base).tocoo().row)
    assert set(changed) <= set(s.grid.bottom_rows)


def test_s5_rows():
    s = system("nonaligned", 12, 1e-2)
    s1, s3, s5 = assemble_nonap(s.grid, s.params), S.s3_matrix(s), S.s5_matrix(s)
    rows = s.grid.bottom_rows
    others = np.setdiff1d(np.arange(s.n), rows)
    assert (s5[others] != s3[others]).nnz == 0
    assert np.allclose(s5[rows].toarray(), (s1[rows] + s3[rows]).toarray(), atol=1e-15)


def test_s6_is_spd_and_aligned_only():
    for eps in (1.0, 1e-6, 1e-20):
        op = S.build_s6(system("aligned", 16, eps))
        assert op.factorization.kind == "cholesky"
        assert sps.is_symmetric(op.matrix)
    with pytest.raises(UnsupportedVariantError):
        S.build_s6(system("nonaligned", 8, 1.0))


@pytest.mark.parametrize("variant", ["s1", "s2", "s3", "s4", "s5", "s6", "exact"])
def test_operator_solves_its_matrix(variant):
    s = system("aligned", 10, 1e-2)
    op = S.build_schur(variant, s)
    r = np.random.default_rng(0).standard_normal(s.n)
    x = op.solve(r)
    assert np.linalg.norm(op.matrix @ x - r) <= 1e-9 * np.linalg.norm(r)
    D = op.matrix.toarray()
    assert np.allclose(op.solve(r, transpose=True), np.linalg.solve(D.T, r), atol=1e-8)


def test_s4_operator_nonaligned_matches_dense():
    s = system("nonaligned", 16, 1e-6)
    op = S.build_s4(s)
    r = np.random.default_rng(1).standard_normal(s.n)
    assert np.allclose(op.solve(r), np.linalg.solve(op.matrix.toarray(), r), atol=1e-8)


def test_s2_on_aligned_system():
    s = system("aligned", 8, 1e-2)
    D = np.diag(s.A3.diagonal())
    dense = s.A1.toarray() - s.A2.toarray() @ np.linalg.inv(D) @ s.B.toarray()
    assert np.allclose(S.s2_matrix(s).toarray(), dense, atol=1e-14)
