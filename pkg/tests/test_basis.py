import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonlocal_toeplitz.basis import element_basis, hat_to_physical, poly1d, reference_basis
from nonlocal_toeplitz.indexing import GridSpec, cube_vertices, inner_grid_point

dims = st.integers(1, 4)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_kronecker_delta_at_vertices(d):
    V = cube_vertices(d)
    for i in range(2**d):
        assert np.allclose(element_basis(i, V), np.eye(2**d)[i])


@given(dims, st.data())
def test_partition_of_unity(d, data):
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    total = sum(element_basis(i, x) for i in range(2**d))
    assert abs(total - 1) < 1e-14


@given(dims, st.data())
def test_multilinear(d, data):
    # affine in each coordinate separately
    x = np.array(data.draw(st.lists(st.floats(0, 1), min_size=d, max_size=d)))
    j = data.draw(st.integers(0, d - 1))
    i = data.draw(st.integers(0, 2**d - 1))
    lo, hi = x.copy(), x.copy()
    lo[j], hi[j] = 0.0, 1.0
    expect = (1 - x[j]) * element_basis(i, lo) + x[j] * element_basis(i, hi)
    assert abs(element_basis(i, x) - expect) < 1e-14


def test_element_basis_domain():
    with pytest.raises(ValueError):
        element_basis(0, [1.2, 0.5])
    with pytest.raises(ValueError):
        element_basis(4, [0.5, 0.5])


def test_reference_basis_values():
    assert reference_basis([0.3, -0.3]) == pytest.approx(0.49)
    assert reference_basis([0.0, 0.0, 0.0]) == 1.0
    assert reference_basis([1.5, 0.0]) == 0.0
    assert reference_basis([1.0, 0.0]) == 0.0


@given(dims, st.data())
def test_reference_basis_symmetry(d, data):
    x = np.array(data.draw(st.lists(st.floats(-1.5, 1.5), min_size=d, max_size=d)))
    perm = data.draw(st.permutations(range(d)))
    signs = np.array(data.draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=d, max_size=d)))
    assert reference_basis(x) == pytest.approx(reference_basis(signs * x[list(perm)]), abs=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_reference_is_sum_of_element_pieces(d):
    # on the cell v_i - 1 + [0,1]^d the hat coincides with the psi of the opposite vertex
    rng = np.random.default_rng(d)
    V = cube_vertices(d)
    for i in range(2**d):
        x = rng.random((20, d))
        assert np.allclose(reference_basis(x + V[i] - 1), element_basis(2**d - 1 - i, x))


def test_hat_to_physical():
    g = GridSpec((0.0, 0.0), (1.0, 1.0), 0.25)
    phi = hat_to_physical(4, g)
    assert phi(inner_grid_point(4, g)) == 1.0
    assert phi(inner_grid_point(5, g)) == 0.0
    assert phi([0.5 + 0.125, 0.5]) == pytest.approx(0.5)
    P = g.points()
    assert np.allclose(sum(hat_to_physical(k, g)(P) for k in range(g.total_dofs)), 1.0)


def test_poly1d():
    assert poly1d(()) == (1.0,)
    assert poly1d((0,)) == (1.0, -1.0)
    assert poly1d((1, 1)) == (0.0, 0.0, 1.0)
    t = 0.37
    for bits in itertools.product((0, 1), repeat=3):
        c = poly1d(bits)
        assert np.polyval(c[::-1], t) == pytest.approx(np.prod([t if b else 1 - t for b in bits]))
