"""Index maps and grid geometry for structured grids on hyperrectangles.

Multi-indices are linearized lexicographically with the last index running
fastest. All combinatorial index sets used by the first-row assembly
(D_i, its complement, the shifted set D_i^c, kappa and the canonical
representatives) live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from fractions import Fraction

import numpy as np

FAR = "far"


def _shape(n):
    n = tuple(int(v) for v in np.atleast_1d(n))
    if any(v < 1 for v in n):
        raise ValueError(f"shape entries must be positive, got {n}")
    return n


def strides(n):
    """Return p_i(n) = prod_{j>i} n_j for every i."""
    n = _shape(n)
    p = [1] * len(n)
    for i in range(len(n) - 2, -1, -1):
        p[i] = p[i + 1] * n[i + 1]
    return tuple(p)


def linearize(z, n):
    """Map multi-index ``z`` to its position in the lexicographic order over ``n``.

    ``z`` may also be an integer array of shape (m, d); then m positions are returned.
    """
    n = _shape(n)
    z = np.asarray(z)
    if z.shape[-1] != len(n):
        raise ValueError(f"multi-index of length {z.shape[-1]} used with shape {n}")
    if np.any(z < 0) or np.any(z >= np.asarray(n)):
        raise ValueError(f"multi-index {z.tolist()} out of range for shape {n}")
    k = z.astype(np.int64) @ np.asarray(strides(n), dtype=np.int64)
    return int(k) if np.ndim(k) == 0 else k


def delinearize(k, n):
    """Inverse of :func:`linearize` (successive div/mod by the strides)."""
    n = _shape(n)
    total = int(np.prod(n))
    k = np.asarray(k, dtype=np.int64)
    if np.any(k < 0) or np.any(k >= total):
        raise ValueError(f"linear index {k.tolist()} out of range [0, {total})")
    out = np.empty(k.shape + (len(n),), dtype=np.int64)
    rest = k.copy()
    for i, p in enumerate(strides(n)):
        out[..., i] = rest // p
        rest = rest % p
    return tuple(int(v) for v in out) if k.ndim == 0 else out


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of size ``h`` on the box prod [a_i, b_i].

    The number of elements per dimension N_i = (b_i - a_i)/h must be an integer
    not smaller than 2. Interior nodes are x_k = a + h (E^{-L}(k) + e).
    """

    a: tuple
    b: tuple
    h: float
    N: tuple = field(init=False)
    L: tuple = field(init=False)

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.a))
        b = tuple(float(v) for v in np.atleast_1d(self.b))
        if np.ndim(self.h) != 0:
            raise ValueError("h must be a scalar (the same grid size in every dimension)")
        h = float(self.h)
        if len(a) != len(b) or len(a) == 0:
            raise ValueError("a and b must be non-empty and of equal length")
        if h <= 0:
            raise ValueError(f"h must be positive, got {h}")
        N = []
        for ai, bi in zip(a, b):
            if bi <= ai:
                raise ValueError(f"empty interval [{ai}, {bi}]")
            # exact rational test so that e.g. 0.2/2**-8 is accepted
            q = (Fraction(bi) - Fraction(ai)) / Fraction(h)
            ni = round(q)
            if abs(float(q) - ni) > 1e-9 * max(1.0, abs(float(q))):
                raise ValueError(f"(b-a)/h = {float(q)} is not an integer for interval [{ai}, {bi}]")
            if ni < 2:
                raise ValueError(f"(b-a)/h = {ni} must be at least 2")
            N.append(int(ni))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "N", tuple(N))
        object.__setattr__(self, "L", tuple(n - 1 for n in N))

    @classmethod
    def snapped(cls, a, b, h):
        """Grid on prod [a_i, a_i + floor((b_i - a_i)/h) h].

        Use when b - a is not a multiple of h; the upper ends move down to the
        last grid line (compare ``b`` of the result with the request).
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        h = float(h)
        if h <= 0:
            raise ValueError(f"h must be positive, got {h}")
        bb = []
        for ai, bi in zip(a, b):
            q = (Fraction(float(bi)) - Fraction(float(ai))) / Fraction(h)
            n = round(q) if abs(float(q) - round(q)) <= 1e-9 * max(1.0, abs(float(q))) else math.floor(q)
            bb.append(float(Fraction(float(ai)) + n * Fraction(h)))
        return cls(tuple(a), tuple(bb), h)

    @property
    def d(self):
        return len(self.a)

    @property
    def total_dofs(self):
        return int(np.prod(self.L))

    def refine(self):
        """The dyadically refined grid with size h/2."""
        return GridSpec(self.a, self.b, self.h / 2)

    def points(self):
        """All interior nodes as an array of shape (total_dofs, d)."""
        z = delinearize(np.arange(self.total_dofs), self.L)
        return np.asarray(self.a) + self.h * (z + 1)


def inner_grid_point(k, g: GridSpec):
    z = np.asarray(delinearize(k, g.L))
    return np.asarray(g.a) + g.h * (z + 1)


def cube_vertices(d):
    """Vertices v_k = E^{-(2,...,2)}(k) of the unit cube, shape (2^d, d)."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return delinearize(np.arange(2**d), (2,) * d)


def _vertex_index(v):
    return linearize(np.asarray(v, dtype=np.int64), (2,) * len(v))


def neighbor_index_sets(d, i):
    """Index sets for vertex ``i``.

    Returns ``(D, D_complement, D_c, kappa)`` where D holds the mu with
    v_mu + v_i in {0,1}^d, kappa maps mu in D to the index of v_i + v_mu, and
    D_c holds the nu with v_i + (cube - v_nu) outside J = [-1,1]^d, so that
    J^c intersected with J_k is the union of v_i + (cube - v_nu) over nu in D_c.
    """
    if not 0 <= i < 2**d:
        raise ValueError(f"vertex index {i} out of range for d={d}")
    V = cube_vertices(d)
    vi = V[i]
    D = [mu for mu in range(2**d) if np.all(V[mu] + vi < 2)]
    Dbar = [mu for mu in range(2**d) if mu not in D]
    Dc = [nu for nu in range(2**d) if np.any((vi == 1) & (V[nu] == 0))]
    kappa = {mu: _vertex_index(V[mu] + vi) for mu in D}
    return D, Dbar, Dc, kappa


def canonical_representatives(d, L=None):
    """S = {(0..0), (1,0..0), ..., (1..1)} and its vertex / grid indices."""
    S = np.array([[1] * m + [0] * (d - m) for m in range(d + 1)], dtype=np.int64)
    idx_i = [_vertex_index(z) for z in S]
    idx_k = None
    if L is not None:
        L = _shape(L)
        idx_k = [linearize(z, L) if np.all(z < np.asarray(L)) else None for z in S]
    return S, idx_i, idx_k


def class_of(k, g: GridSpec):
    """Canonical grid index of the near class of ``k`` or :data:`FAR`."""
    z = np.asarray(delinearize(k, g.L))
    if np.any(z > 1):
        return FAR
    return linearize(np.sort(z)[::-1], g.L)


def near_vertex_of(z):
    """Vertex index of a 0/1 multi-index, or None if ``z`` has entries > 1."""
    z = np.asarray(z)
    if np.any(z > 1):
        return None
    return _vertex_index(z)
