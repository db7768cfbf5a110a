"""Independent reference values for stiffness entries (fractional kernel).

The entry a_kj of the truncated problem is computed without the first-row
machinery:

    a_kj = C [ h^(d-2s) I(z) - 2 int phi_k phi_j(x) E(x) dx ],   C = c_{d,s}/2,

with z = (x_k - x_j)/h. I(z) is the whole-space form

    I(z) = int |v|^(-d-2s) (2 B(z) - B(v - z) - B(v + z)) dv,

where B(v) = prod b(v_i) is the autocorrelation of the hat function (a
cubic B-spline), and E(x) = int_{y outside Box} |y - x|^(-d-2s) dy is the
part removed by truncating to the infinity-norm box of radius R around x_j.
E is evaluated through the face identity

    E(x) = 1/(2s) sum_faces D_F int_F |y - x|^(-d-2s) dA(y),

D_F being the distance from x to the plane of face F. The integrand of I(z)
is a polynomial times |v|^(-d-2s) on every unit cell; the cells touching the
origin are swept by rays from it (QUADPACK algebraic-weight rule along each
ray), all others are smooth and use high-order tensor Gauss rules.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy import integrate
from scipy.special import roots_legendre

from .kernel import fractional_constant


def hat_autocorrelation(v):
    """b(v) = int (1-|x|)_+ (1-|x+v|)_+ dx."""
    a = np.abs(np.asarray(v, dtype=float))
    inner = 2.0 / 3.0 - a**2 + 0.5 * a**3
    outer = (2.0 - a) ** 3 / 6.0
    return np.where(a <= 1, inner, np.where(a < 2, outer, 0.0))


def _B(v):
    return np.prod(hat_autocorrelation(v), axis=-1)


def _gauss_box(n, lo, hi):
    x, w = roots_legendre(n)
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    d = len(lo)
    X = np.array(list(itertools.product(x, repeat=d))).reshape(-1, d)
    W = np.prod(np.array(list(itertools.product(w, repeat=d))).reshape(-1, d), axis=1)
    return lo + (hi - lo) * (X + 1) / 2, W * np.prod((hi - lo) / 2)


def whole_space_integral(z, s, rtol=1e-11, n_smooth=16):
    z = np.asarray(z, dtype=float)
    d = len(z)
    beta = d + 2 * s
    Bz = _B(z)

    def G(v):
        return 2 * Bz - _B(v - z) - _B(v + z)

    def integrand(v):
        r2 = np.sum(v * v, axis=-1)
        out = np.zeros(r2.shape)
        nz = r2 > 0
        out[nz] = G(v[nz]) * r2[nz] ** (-beta / 2)
        return out

    K = int(np.max(np.abs(z))) + 2
    total = 0.0
    for m in itertools.product(range(-K, K), repeat=d):
        lo = np.array(m, float)
        hi = lo + 1
        if all(v in (-1, 0) for v in m):
            total += _origin_cell(G, np.where(lo < 0, -1.0, 1.0), s, rtol)
        else:
            X, W = _gauss_box(n_smooth, lo, hi)
            total += float(integrand(X) @ W)
    # exterior of [-K, K]^d where G = 2 B(z)
    total += 2 * Bz * outside_box_integral(np.zeros(d), K, s)
    return total


def _origin_cell(G, signs, s, rtol, n_face=16):
    """Cell with a vertex at the origin, swept by rays v = t y to its far faces.

    G is a polynomial on the cell vanishing to second order at 0, so the ray
    integrand is t^(1-2s) G(t y)/t^2 |y|^(-d-2s); QUADPACK's algebraic-weight
    rule handles the endpoint factor.
    """
    d = len(signs)
    beta = d + 2 * s
    total = 0.0
    for j in range(d):
        others = [k for k in range(d) if k != j]
        if d == 1:
            Ys, Ws = np.ones((1, 1)), np.ones(1)
        else:
            T, Ws = _gauss_box(n_face, [0.0] * (d - 1), [1.0] * (d - 1))
            Ys = np.empty((len(Ws), d))
            Ys[:, j] = 1.0
            Ys[:, others] = T
        for y, w in zip(Ys * signs, Ws):
            val, _ = integrate.quad(lambda t: G(t * y[None, :])[0] / (t * t), 0.0, 1.0, weight="alg",
                                    wvar=(1 - 2 * s, 0.0), epsrel=rtol, epsabs=0.0, limit=200)
            total += w * val * float(y @ y) ** (-beta / 2)
    return total


def outside_box_integral(p, R, s, n_face=24):
    """int_{|y|_inf > R} |y - p|^(-d-2s) dy for a point p inside the box."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    d = len(p)
    beta = d + 2 * s
    total = 0.0
    for m in range(d):
        for sign in (-1.0, 1.0):
            D = R - sign * p[m]
            if d == 1:
                face = D ** (-beta)
            else:
                others = [l for l in range(d) if l != m]
                T, W = _gauss_box(n_face, [-R] * (d - 1), [R] * (d - 1))
                diff = T - p[others]
                face = float((D * D + np.sum(diff * diff, axis=1)) ** (-beta / 2) @ W)
            total += D * face
    return total / (2 * s)


def truncation_integral(z, h, s, R, n=8):
    """int phi_k phi_j(x) E(x) dx with the box of radius R centred at x_j (x_j = 0)."""
    z = np.asarray(z, dtype=float)
    d = len(z)
    total = 0.0
    # overlap of the two patches, split into unit cells where both hats are multilinear
    ranges = [range(int(max(-1, zi - 1)), int(min(1, zi + 1))) for zi in z]
    for m in itertools.product(*ranges):
        lo = np.array(m, float)
        X, W = _gauss_box(n, lo, lo + 1)
        phi = np.prod(1 - np.abs(X), axis=1) * np.prod(1 - np.abs(X - z), axis=1)
        E = np.array([outside_box_integral(h * x, R, s) for x in X])
        total += float((phi * E) @ W)
    return h**d * total


def stiffness_entry(z, h, s, R, constant=None):
    """Entry a_kj of the truncated fractional problem for offset z = (x_k - x_j)/h."""
    z = np.asarray(z, dtype=float)
    d = len(z)
    c = fractional_constant(d, s) if constant is None else constant
    if np.max(np.abs(z)) >= 2:
        trunc = 0.0
    else:
        trunc = truncation_integral(z, h, s, R)
    return 0.5 * c * (h ** (d - 2 * s) * whole_space_integral(z, s) - 2 * trunc)


def dense_matrix(points, h, s, R, constant=None):
    """Dense stiffness matrix for the given interior nodes.

    The exact entry only depends on |z| up to ordering (the kernel and the
    truncation box are invariant under coordinate flips and swaps), so one
    integral is computed per sorted absolute offset.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    cache = {}
    A = np.empty((n, n))
    for k in range(n):
        for j in range(n):
            z = tuple(sorted(np.abs(np.rint((points[k] - points[j]) / h).astype(int))))
            if z not in cache:
                cache[z] = stiffness_entry(z, h, s, R, constant)
            A[k, j] = cache[z]
    return A
