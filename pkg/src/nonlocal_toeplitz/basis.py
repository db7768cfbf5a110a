"""Multilinear element basis on the unit cube and the reference hat function."""

import numpy as np

from .indexing import GridSpec, cube_vertices, inner_grid_point


def element_basis(i, x):
    """psi_i(x) = prod_{v_i^j=0} (1 - x_j) prod_{v_i^j=1} x_j for x in [0,1]^d.

    ``x`` has shape (d,) or (m, d).
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if not 0 <= i < 2**d:
        raise ValueError(f"vertex index {i} out of range for d={d}")
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("element_basis is only defined on the unit cube")
    v = cube_vertices(d)[i]
    return np.prod(np.where(v == 1, x, 1 - x), axis=-1)


def reference_basis(x):
    """phi(x) = prod (1 - |x_i|) on J = [-1,1]^d and 0 outside."""
    x = np.asarray(x, dtype=float)
    inside = np.max(np.abs(x), axis=-1) <= 1
    return np.where(inside, np.prod(1 - np.abs(x), axis=-1), 0.0)


def hat_to_physical(k, g: GridSpec):
    """Nodal basis function phi_k(x) = phi((x - x_k)/h)."""
    xk = inner_grid_point(k, g)
    h = g.h

    def phi_k(x):
        return reference_basis((np.asarray(x, dtype=float) - xk) / h)

    return phi_k


def poly1d(bits):
    """Coefficients (increasing degree) of prod over ``bits`` of (1-t) or t.

    ``bits`` is a sequence of 0/1 values; an empty sequence gives the constant 1.
    """
    c = np.array([1.0])
    for b in bits:
        c = np.convolve(c, [0.0, 1.0] if b else [1.0, -1.0])
    return tuple(c)
