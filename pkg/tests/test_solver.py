import math

import numpy as np
import pytest
import scipy.linalg

from nonlocal_toeplitz.assembly import FarFieldGeometry, assemble_first_row, assemble_source
from nonlocal_toeplitz.indexing import GridSpec
from nonlocal_toeplitz.kernel import FractionalKernel
from nonlocal_toeplitz.quadrature import QuadratureTable
from nonlocal_toeplitz.solver import BreakdownError, cg_solve, default_max_it, levinson_solve_1d
from nonlocal_toeplitz.toeplitz import ToeplitzOperator


@pytest.fixture(scope="module")
def system63():
    g = GridSpec((-1.0,), (1.0,), 2.0**-5)
    row = assemble_first_row(g, FractionalKernel(1, 0.4, math.inf), QuadratureTable(1, 7),
                             FarFieldGeometry(g, 5.0, T=64))
    b = assemble_source(g, lambda x: np.ones(len(x)), QuadratureTable(1, 7))
    return ToeplitzOperator(row.M), b


def test_identity_one_iteration():
    b = np.random.default_rng(0).normal(size=50)
    r = cg_solve(lambda x: x, b)
    assert r.converged and r.iterations == 1
    assert np.allclose(r.x, b, rtol=1e-15)
    assert r.true_residual < 1e-15


def test_zero_rhs():
    r = cg_solve(lambda x: x, np.zeros(4))
    assert r.converged and r.iterations == 0 and not r.x.any()


@pytest.mark.parametrize("stop", ["true", "recurrence"])
def test_assembled_system_vs_dense(system63, stop):
    op, b = system63
    assert op.size == 63
    ref = np.linalg.solve(op.dense(), b)
    r = cg_solve(op.matvec, b, tol=1e-12, stop=stop)
    assert r.converged
    assert np.linalg.norm(r.x - ref) <= 1e-9 * np.linalg.norm(ref)
    if stop == "true":
        assert r.true_residual < 1e-12
    assert r.residual_history[-1] < 1e-12 or stop == "true"
    assert len(r.residual_history) >= r.iterations


def test_true_residual_checks_logged(system63):
    op, b = system63
    r = cg_solve(op.matvec, b, tol=1e-12, stop="recurrence")
    assert [k for k, _ in r.true_checks] == list(range(25, r.iterations + 1, 25))


def test_max_it_and_default():
    A = np.diag(np.arange(1.0, 101.0))
    r = cg_solve(lambda x: A @ x, np.ones(100), tol=1e-14, max_it=3)
    assert not r.converged and r.iterations == 3
    assert default_max_it(1023) == int(20 * math.sqrt(1023))
    assert default_max_it(10**8) == 50000
    with pytest.raises(ValueError):
        cg_solve(lambda x: x, np.ones(3), stop="sometimes")


def test_breakdown():
    with pytest.raises(BreakdownError):
        cg_solve(lambda x: -x, np.ones(3))
    with pytest.raises(BreakdownError):
        cg_solve(lambda x: x * np.nan, np.ones(3))
    with pytest.raises(BreakdownError):
        cg_solve(lambda x: x, np.array([1.0, np.inf]))


def test_levinson_examples():
    assert np.allclose(levinson_solve_1d([2.0, -1.0], [1.0, 1.0]), [1.0, 1.0], rtol=1e-15)
    rng = np.random.default_rng(7)
    for L in (1, 5, 33, 64):
        c = rng.normal(size=L) * 0.5 ** np.arange(L)
        c[0] = np.abs(c[1:]).sum() * 2 + 1  # diagonally dominant, hence SPD
        b = rng.normal(size=L)
        ref = np.linalg.solve(scipy.linalg.toeplitz(c), b)
        assert np.linalg.norm(levinson_solve_1d(c, b) - ref) <= 1e-8 * np.linalg.norm(ref)


def test_levinson_errors():
    with pytest.raises(BreakdownError):
        levinson_solve_1d([1.0, 1.0, 1.0], np.ones(3))  # singular 2x2 minor
    with pytest.raises(BreakdownError):
        levinson_solve_1d([1.0, 2.0, 1.0], np.ones(3))
    with pytest.raises(BreakdownError):
        levinson_solve_1d([0.0, 1.0], np.ones(2))
    with pytest.raises(ValueError):
        levinson_solve_1d(np.ones((2, 2)), np.ones(4))
    with pytest.raises(ValueError):
        levinson_solve_1d([2.0, 1.0], np.ones(3))


def test_levinson_matches_cg(system63):
    op, b = system63
    x = levinson_solve_1d(op.t, b)
    r = cg_solve(op.matvec, b, tol=1e-12)
    assert np.linalg.norm(x - r.x) <= 1e-8 * np.linalg.norm(x)
