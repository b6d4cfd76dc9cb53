import numpy as np
import pytest

from mmapsolve.exceptions import InvalidGridError
from mmapsolve.grid import BoundaryClass, classify, lexico, make_grid, unlexico


def test_aligned_dimensions():
    g = make_grid("aligned", 32)
    assert (g.n_x, g.n_z) == (32, 33)
    # dx = 1/(n_x - 1) and dz = 1/(n_z - 2) coincide
    assert g.h == 1 / 31 == 1 / (g.n_x - 1) == 1 / (g.n_z - 2)
    assert g.size == 32 * 33


def test_nonaligned_dimensions():
    g = make_grid("nonaligned", 32)
    assert (g.n_x, g.n_z, g.h) == (32, 32, 1 / 31)
    assert g.z[0] == 0.0 and g.z[-1] == pytest.approx(1.0)


def test_aligned_nodes_straddle_the_z_boundaries():
    g = make_grid("aligned", 16)
    assert g.z[0] == pytest.approx(-g.h / 2)
    assert g.z[-1] == pytest.approx(1 + g.h / 2)
    assert g.x[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("N", [3, 0, -2])
def test_too_small_mesh_rejected(N):
    with pytest.raises(InvalidGridError):
        make_grid("aligned", N)


def test_lexico_examples():
    g = make_grid("aligned", 32)
    assert lexico(1, 1, g) == 1
    assert lexico(2, 1, g) == 34
    with pytest.raises(IndexError):
        lexico(0, 1, g)
    with pytest.raises(IndexError):
        lexico(1, g.n_z + 1, g)


@pytest.mark.parametrize("case", ["aligned", "nonaligned"])
def test_lexico_is_a_bijection(case):
    g = make_grid(case, 7)
    seen = set()
    for i in range(1, g.n_x + 1):
        for j in range(1, g.n_z + 1):
            k = lexico(i, j, g)
            assert unlexico(k, g) == (i, j)
            assert g.flat(i, j) == k - 1
            seen.add(k)
    assert seen == set(range(1, g.size + 1))


def test_classify_examples():
    g = make_grid("aligned", 32)
    assert classify(1, 5, g) is BoundaryClass.DIRICHLET_X
    assert classify(5, 1, g) is BoundaryClass.NEUMANN_BOTTOM
    assert classify(5, 5, g) is BoundaryClass.INTERIOR
    assert classify(5, g.n_z, g) is BoundaryClass.NEUMANN_TOP
    # x-sides own the corners
    for i, j in [(1, 1), (1, g.n_z), (g.n_x, 1), (g.n_x, g.n_z)]:
        assert classify(i, j, g) is BoundaryClass.DIRICHLET_X


def test_labels_agree_with_classify_and_partition():
    g = make_grid("nonaligned", 9)
    for k in range(g.size):
        i, j = unlexico(k + 1, g)
        assert g.labels[k] == classify(i, j, g)
    parts = [g.interior_rows, g.dirichlet_rows, g.bottom_rows, g.top_rows]
    assert sum(p.size for p in parts) == g.size
    assert np.unique(np.concatenate(parts)).size == g.size
    assert g.bottom_rows.size == g.n_x - 2
