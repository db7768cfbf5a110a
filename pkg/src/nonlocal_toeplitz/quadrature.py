"""Quadrature on the unit cube.

* tensor Gauss-Legendre rules for smooth single and double integrals,
* a tensorized adaptive (G7, K15) Gauss-Kronrod cubature,
* the symmetrized rule for integrands that are singular on the diagonal x = y,
* the difference-variable reduction for pairs of unit cubes that touch.

The last item rewrites int_cube int_cube p(x) q(y) k(c + y - x) dy dx as a
d-dimensional integral over w = y - x in [-1,1]^d,

    int k(c + w) prod_j Phi_j(w_j) dw,   Phi_j(w) = int p_j(t) q_j(t + w) dt,

where Phi_j is a polynomial on each half w < 0, w > 0 and is evaluated
exactly. The kernel singularity then sits at a vertex of the orthant boxes.
For power-law kernels those boxes are swept radially from the vertex with a
Gauss-Jacobi rule; otherwise they are refined geometrically toward it.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1] (QUADPACK qk15)
_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])


def _kronrod_unit():
    x = np.concatenate([-_XK[:-1], _XK[::-1]])
    wk = np.concatenate([_WK[:-1], _WK[::-1]])
    wg = np.zeros(15)
    # Gauss nodes are the odd positions of _XK
    g = np.zeros(8)
    g[1::2] = _WG
    wg = np.concatenate([g[:-1], g[::-1]])
    return (x + 1) / 2, wk / 2, wg / 2


XK15, WK15, WG7 = _kronrod_unit()


def gauss_legendre_unit(n):
    """n-point Gauss-Legendre nodes and weights on [0, 1]."""
    if not 1 <= n <= 64:
        raise ValueError(f"number of Gauss points must lie in [1, 64], got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _tensor(x, w, d):
    X = np.array(list(itertools.product(x, repeat=d))).reshape(-1, d)
    W = np.prod(np.array(list(itertools.product(w, repeat=d))).reshape(-1, d), axis=1)
    return X, W


@dataclass(frozen=True)
class QuadratureTable:
    """Tensor Gauss rule with ``n`` points per dimension on the unit cube.

    ``X, W_single`` integrate over the cube; ``V, Q, W_double`` over the
    product cube x cube (V holds the x nodes, Q the y nodes).
    """

    d: int
    n: int
    X: np.ndarray = field(init=False, repr=False)
    W_single: np.ndarray = field(init=False, repr=False)
    V: np.ndarray = field(init=False, repr=False)
    Q: np.ndarray = field(init=False, repr=False)
    W_double: np.ndarray = field(init=False, repr=False)
    x1d: np.ndarray = field(init=False, repr=False)
    w1d: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x, w = gauss_legendre_unit(self.n)
        X, W = _tensor(x, w, self.d)
        m = len(W)
        object.__setattr__(self, "x1d", x)
        object.__setattr__(self, "w1d", w)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "W_single", W)
        object.__setattr__(self, "V", np.repeat(X, m, axis=0))
        object.__setattr__(self, "Q", np.tile(X, (m, 1)))
        object.__setattr__(self, "W_double", np.repeat(W, m) * np.tile(W, m))


def integrate_single(t: QuadratureTable, g):
    vals = np.asarray(g(t.X), dtype=float)
    _check_finite(vals, t.X)
    return float(vals @ t.W_single)


def integrate_double_smooth(t: QuadratureTable, g):
    """Tensor Gauss approximation of int_cube int_cube g(x, y) dy dx."""
    vals = np.asarray(g(t.V, t.Q), dtype=float)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise FloatingPointError(f"non-finite integrand at x={t.V[j]}, y={t.Q[j]}")
    return float(vals @ t.W_double)


def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise FloatingPointError(f"non-finite integrand at {pts[j]}")


@dataclass
class CubatureResult:
    value: float
    error: float
    converged: bool
    boxes: int
    evaluations: int


class _KronrodRule:
    _cache = {}

    def __new__(cls, d):
        if d not in cls._cache:
            obj = super().__new__(cls)
            obj.X = _tensor(XK15, WK15, d)[0]
            obj.WK = _tensor(XK15, WK15, d)[1]
            obj.WG = _tensor(XK15, WG7, d)[1]
            cls._cache[d] = obj
        return cls._cache[d]


def adaptive_cubature(f, lo, hi, rel_tol=1e-10, abs_tol=0.0, max_depth=30, max_boxes=20000):
    """Globally adaptive tensor (G7, K15) cubature over the box [lo, hi].

    ``f`` maps an (m, d) array of points to m values. The box with the largest
    |K15 - G7| estimate is bisected in every direction until the summed
    estimate drops below max(rel_tol |value|, abs_tol). Boxes that reach
    ``max_depth`` bisections are frozen and the result is flagged as not
    converged.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = len(lo)
    rule = _KronrodRule(d)
    corners = np.array(list(itertools.product((0, 1), repeat=d)))
    nev = 0

    def evaluate(boxes):
        nonlocal nev
        los = np.array([b[0] for b in boxes])
        his = np.array([b[1] for b in boxes])
        span = his - los
        pts = (los[:, None, :] + span[:, None, :] * rule.X[None]).reshape(-1, d)
        vals = np.asarray(f(pts), dtype=float).reshape(len(boxes), -1)
        nev += vals.size
        if not np.all(np.isfinite(vals)):
            j = int(np.argmax(~np.isfinite(vals.ravel())))
            raise FloatingPointError(f"non-finite integrand at {pts[j]}")
        vol = np.prod(span, axis=1)
        k = vol * (vals @ rule.WK)
        g = vol * (vals @ rule.WG)
        return k, np.abs(k - g)

    k, e = evaluate([(lo, hi)])
    heap = [(-e[0], 0, lo, hi, k[0], e[0], 0)]
    counter = 1
    total, err = k[0], e[0]
    frozen_err = 0.0
    frozen_val = 0.0
    converged = True
    while heap:
        if err <= max(rel_tol * abs(total), abs_tol):
            break
        if counter >= max_boxes:
            converged = False
            break
        _, _, blo, bhi, bk, be, depth = heapq.heappop(heap)
        if depth >= max_depth:
            converged = False
            frozen_err += be
            frozen_val += bk
            # frozen boxes keep their value; the remaining heap may still refine
            if err - frozen_err <= max(rel_tol * abs(total), abs_tol):
                break
            continue
        mid = 0.5 * (blo + bhi)
        children = []
        for c in corners:
            clo = np.where(c == 0, blo, mid)
            chi = np.where(c == 0, mid, bhi)
            children.append((clo, chi))
        ck, ce = evaluate(children)
        total += ck.sum() - bk
        err += ce.sum() - be
        for (clo, chi), kk, ee in zip(children, ck, ce):
            heapq.heappush(heap, (-ee, counter, clo, chi, kk, ee, depth + 1))
            counter += 1
    # recompute the sum from the leaves to limit accumulated cancellation
    total = frozen_val + sum(b[4] for b in heap)
    return CubatureResult(float(total), float(err), converged, counter, nev)


def vertex_graded_cubature(f, lo, hi, corner, rel_tol=1e-10, abs_tol=0.0, sigma=0.15, max_levels=60,
                           max_depth=30):
    """Adaptive cubature for an integrand singular at one corner of [lo, hi].

    ``corner`` is a 0/1 vector selecting the singular corner (0 = lower end).
    The box is split at the fraction ``sigma`` from that corner in every
    direction; the 2^d - 1 shell boxes away from the corner are integrated
    with :func:`adaptive_cubature` and the corner box is split again. For a
    power-type singularity the shell contributions decay geometrically, so the
    remaining corner is estimated by the geometric tail inc * rho / (1 - rho)
    of the last two shell sums. Refinement stops when that extrapolated value
    settles or when the corner is resolved to floating-point precision.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    corner = np.asarray(corner, dtype=bool)
    d = len(lo)
    partial = 0.0
    err = 0.0
    nev = 0
    boxes = 0
    incs = []
    prev_est = None
    for level in range(max_levels):
        span = hi - lo
        cut = np.where(corner, hi - sigma * span, lo + sigma * span)
        near_lo = np.where(corner, cut, lo)
        near_hi = np.where(corner, hi, cut)
        far_lo = np.where(corner, lo, cut)
        far_hi = np.where(corner, cut, hi)
        inc = 0.0
        sub_abs = max(abs_tol, 0.1 * rel_tol * abs(partial))
        for bits in itertools.product((0, 1), repeat=d):
            if not any(bits):
                continue
            b = np.array(bits, dtype=bool)
            r = adaptive_cubature(f, np.where(b, far_lo, near_lo), np.where(b, far_hi, near_hi),
                                  rel_tol=rel_tol, abs_tol=sub_abs, max_depth=max_depth,
                                  max_boxes=20000 if level == 0 else 2000)
            inc += r.value
            err += r.error
            nev += r.evaluations
            boxes += r.boxes
            # deep shells hit the roundoff floor of the integrand; judge them against the running total
            if not r.converged and not (level > 0 and r.error <= rel_tol * abs(partial)):
                return CubatureResult(partial + inc, err, False, boxes, nev)
        partial += inc
        incs.append(inc)
        lo, hi = near_lo, near_hi
        corner_k15 = adaptive_cubature(f, lo, hi, rel_tol=1.0, max_depth=0)
        nev += corner_k15.evaluations
        tail = corner_k15.value
        if len(incs) >= 2 and incs[-2] != 0:
            rho = incs[-1] / incs[-2]
            if 0 < rho < 0.9:
                tail = incs[-1] * rho / (1 - rho)
        est = partial + tail
        tol = max(rel_tol * abs(est), abs_tol)
        if level > 0 and abs(corner_k15.value) <= tol:
            return CubatureResult(partial + corner_k15.value, err + abs(corner_k15.value), True, boxes, nev)
        if prev_est is not None and level >= 2 and abs(est - prev_est) <= tol:
            return CubatureResult(est, err + abs(est - prev_est), True, boxes, nev)
        prev_est = est
        if np.any(hi - lo <= 1e3 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi))):
            return CubatureResult(est, err + abs(tail), False, boxes, nev)
    return CubatureResult(prev_est, err, False, boxes, nev)


def _inner_boxes(x):
    """Split [0,1]^{d-1} x [0, x_{d-1}] into 2^{d-1} boxes having x as a vertex."""
    d = len(x)
    boxes = []
    for side in itertools.product((0, 1), repeat=d - 1):
        lo = np.array([0.0 if s == 0 else x[j] for j, s in enumerate(side)] + [0.0])
        hi = np.array([x[j] if s == 0 else 1.0 for j, s in enumerate(side)] + [x[-1]])
        if np.all(hi > lo):
            boxes.append((lo, hi))
    return boxes


def integrate_singular_diagonal(t: QuadratureTable, f, rel_tol=1e-10, max_depth=30, outer="gauss"):
    """Symmetrized integral of f(x, y) = f(y, x) over cube x cube.

    Uses int_{cube x cube} f = 2 int_M f with M = {y_{d-1} <= x_{d-1}}. The
    inner integral over [0,1]^{d-1} x [0, x_{d-1}] is split into boxes that
    have x as a vertex and is computed adaptively. The outer integral uses the
    Gauss nodes of ``t`` (``outer="gauss"``) or adaptive cubature
    (``outer="adaptive"``), which is needed when the inner integral is not
    smooth in x.

    Returns a :class:`CubatureResult`.
    """
    d = t.d
    ok = True

    def inner(x):
        nonlocal ok
        val = 0.0
        for lo, hi in _inner_boxes(x):
            corner = np.isclose(hi, x) & ~np.isclose(lo, x)
            r = vertex_graded_cubature(lambda y: f(np.broadcast_to(x, y.shape), y), lo, hi, corner,
                                       rel_tol=rel_tol, max_depth=max_depth)
            ok &= r.converged
            val += r.value
        return val

    if outer == "gauss":
        vals = np.array([inner(x) for x in t.X])
        value = 2 * float(vals @ t.W_single)
        return CubatureResult(value, float("nan"), ok, 0, 0)
    if outer == "adaptive":
        r = adaptive_cubature(lambda X: np.array([inner(x) for x in X]),
                              np.zeros(d), np.ones(d), rel_tol=rel_tol, max_depth=max_depth)
        return CubatureResult(2 * r.value, 2 * r.error, ok and r.converged, r.boxes, r.evaluations)
    raise ValueError(f"unknown outer rule {outer!r}")


# ---------------------------------------------------------------------------
# difference-variable reduction


_T4, _W4 = gauss_legendre_unit(4)


def convolution_weight(p, q, w):
    """Phi(w) = int p(t) q(t + w) dt over t in [0,1] with t + w in [0,1].

    ``p`` and ``q`` are coefficient tuples (increasing degree, degree <= 3).
    Exact up to round-off since the integrand has degree <= 7 in t.
    """
    w = np.asarray(w, dtype=float)
    lo = np.maximum(0.0, -w)
    hi = np.minimum(1.0, 1.0 - w)
    span = np.maximum(hi - lo, 0.0)
    t = lo[..., None] + span[..., None] * _T4
    pv = np.polynomial.polynomial.polyval(t, p)
    qv = np.polynomial.polynomial.polyval(t + w[..., None], q)
    return span * ((pv * qv) @ _W4)


@dataclass(frozen=True)
class SeparableTerm:
    """coef * prod_j p_j(x_j) * prod_j q_j(y_j) with 1d polynomial factors."""

    coef: float
    p: tuple
    q: tuple


def difference_weight(terms, w):
    """G(w) = sum over terms of coef * prod_j Phi(p_j, q_j; w_j), w of shape (m, d)."""
    w = np.asarray(w, dtype=float)
    cache = {}
    total = np.zeros(w.shape[0])
    for term in terms:
        val = np.full(w.shape[0], term.coef)
        for j, (pj, qj) in enumerate(zip(term.p, term.q)):
            key = (j, pj, qj)
            if key not in cache:
                cache[key] = convolution_weight(pj, qj, w[:, j])
            val = val * cache[key]
        total += val
    return total


def radial_corner_cubature(f, signs, alpha, n_radial=8, rel_tol=1e-10, abs_tol=0.0, max_depth=30):
    """int over the unit box spanned by 0 and ``signs`` (entries +-1) of f(u) du.

    The box is swept by rays u = t y from the corner 0 to its far faces, so
    that du = t^(d-1) dt dA(y). The radial factor f(t y) t^(d-1) is assumed
    to behave like t^alpha times a smooth function; it is integrated with a
    Gauss-Jacobi rule for that weight, which is exact when the smooth factor
    is a polynomial of degree < 2 n_radial. The far faces use adaptive
    cubature.
    """
    signs = np.asarray(signs, dtype=float)
    d = len(signs)
    if alpha <= -1:
        raise ValueError("radial exponent must exceed -1 for the corner integral to exist")
    x, w = roots_jacobi(n_radial, 0.0, alpha)
    t = 0.5 * (x + 1)
    w = w * 0.5 ** (alpha + 1)
    rad_fac = w * t ** (d - 1 - alpha)
    value = 0.0
    err = 0.0
    ok = True
    for j in range(d):
        others = [k for k in range(d) if k != j]

        def face(y):
            m = len(y)
            Y = np.empty((m, d))
            Y[:, j] = 1.0
            Y[:, others] = y
            U = (t[:, None, None] * (Y * signs)[None, :, :]).reshape(-1, d)
            return rad_fac @ f(U).reshape(n_radial, m)

        if d == 1:
            value += float(face(np.zeros((1, 0)))[0])
            continue
        r = adaptive_cubature(face, np.zeros(d - 1), np.ones(d - 1), rel_tol=rel_tol, abs_tol=abs_tol,
                              max_depth=max_depth)
        value += r.value
        err += r.error
        ok &= r.converged
    return CubatureResult(value, err, ok, 0, 0)


def integrate_touching_pair(terms, c, profile, scale=1.0, rel_tol=1e-10, abs_tol=0.0, max_depth=30,
                            power=None):
    """int_cube int_cube sum_terms p(x) q(y) profile(scale |c + y - x|) dy dx.

    ``c`` is an integer offset with |c|_inf <= 1 (cubes that share at least a
    vertex). The integrand must vanish at the singular point strongly enough
    for the result to be finite.

    If ``power`` = beta is given, profile(r) must be C r^(-beta). The weight
    is then a polynomial on each box touching the singular point, which makes
    the radial rule of :func:`radial_corner_cubature` exact in t. The weight
    vanishes to second order at the singular point (needed for a finite
    integral once beta >= d + 1), so the radial factor is t^(d+1-beta) times a
    polynomial. Otherwise those boxes are refined toward the vertex.
    """
    c = np.asarray(c, dtype=float)
    d = len(c)
    value = 0.0
    ok = True

    def g(u):
        r = scale * np.sqrt(np.sum(u * u, axis=1))
        G = difference_weight(terms, u - c)
        out = np.zeros_like(r)
        nz = G != 0
        out[nz] = G[nz] * profile(r[nz])
        return out

    # integrate over u = c + w so that the singular point is exactly u = 0
    for side in itertools.product((0, 1), repeat=d):
        lo = c + np.array([-1.0 if s == 0 else 0.0 for s in side])
        hi = lo + 1.0
        if np.all((lo == 0) | (hi == 0)) and power is not None:
            r = radial_corner_cubature(g, np.where(hi == 0, -1.0, 1.0), d + 1 - power,
                                       n_radial=2 * d + 2, rel_tol=rel_tol, abs_tol=abs_tol, max_depth=max_depth)
        elif np.all((lo == 0) | (hi == 0)):
            r = vertex_graded_cubature(g, lo, hi, hi == 0, rel_tol=rel_tol, abs_tol=abs_tol, max_depth=max_depth)
        else:
            r = adaptive_cubature(g, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol, max_depth=max_depth)
        ok &= r.converged
        value += r.value
    return value, ok
