"""First-row assembly M = sing + rad + dis and the load vector.

Conventions. All cube-pair integrals are written in reference coordinates
relative to the node x_0 = a + h e, so the kernel argument of a pair of unit
cubes with offset c is h |c + y - x|. Cube pairs that share at least a vertex
(|c|_inf <= 1) go through the difference-variable reduction of
:mod:`.quadrature`; separated pairs use the tensor Gauss rule.

The truncated far field is the infinity-norm box of radius R = T + lambda
around x_0 minus the union U of the two patches. It is split into the box
B = prod [a_i - lambda, a_i + lambda], meshed with cells of size h, and a
graded coarse grid on the rest.
"""

from __future__ import annotations

import io
import itertools
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .basis import poly1d
from .indexing import GridSpec, canonical_representatives, cube_vertices, delinearize, linearize, neighbor_index_sets
from .kernel import KernelSpec
from .quadrature import QuadratureTable, SeparableTerm, gauss_legendre_unit, integrate_touching_pair

CACHE_VERSION = 1
# target relative error of the per-cell Gauss rules on the coarse far grid
FAR_TOL = 1e-13
FAR_MAX_ORDER = 16


# ---------------------------------------------------------------------------
# far-field geometry


def graded_breakpoints(length, q, h_min):
    """Offsets 0 = t_0 < t_1 < ... = length with t_i = i^q h_min, clipped.

    A last piece shorter than half the preceding gap is merged into the
    previous cell.
    """
    if length <= 0:
        return np.array([0.0])
    pts = [0.0]
    i = 1
    while True:
        t = i**q * h_min
        if t >= length * (1 - 1e-12):
            break
        pts.append(t)
        i += 1
    if len(pts) > 1 and length - pts[-1] < 0.5 * (pts[-1] - pts[-2]):
        pts[-1] = length
    else:
        pts.append(length)
    return np.array(pts)


@dataclass
class FarFieldGeometry:
    """Box B around a, the outer truncation box and the coarse grid parameters."""

    grid: GridSpec
    lam: float
    T: float = 2.0**10
    q: float = 1.5
    h_min: float = 1e-2
    lam_requested: float = field(init=False)
    ratio: int = field(init=False)

    def __post_init__(self):
        h = self.grid.h
        if self.q < 1:
            raise ValueError(f"coarsening parameter q must be >= 1, got {self.q}")
        if not self.h_min > 0:
            raise ValueError("h_min must be positive")
        if self.T < h:
            raise ValueError(f"truncation T={self.T} must be at least h={h}")
        self.lam_requested = float(self.lam)
        ratio = int(math.floor(self.lam / h + 1e-9))
        self.ratio = ratio
        self.lam = ratio * h
        if ratio <= 2:
            raise ValueError(f"box half-width lambda={self.lam_requested} must exceed 2h={2 * h}")

    @property
    def adjusted(self):
        return abs(self.lam - self.lam_requested) > 1e-12 * self.lam_requested

    @property
    def R(self):
        return self.T + self.lam

    @property
    def N2(self):
        return (2 * self.ratio,) * self.grid.d

    @property
    def center(self):
        return np.asarray(self.grid.a) + self.grid.h

    def key(self):
        return {"lambda": self.lam, "T": self.T, "q": self.q, "h_min": self.h_min}

    def segments(self, j):
        """1d coarse cells (start, width) of dimension j, split as (left, mid, right)."""
        a, c, lam, R = self.grid.a[j], self.center[j], self.lam, self.R
        out = []
        t = graded_breakpoints((a - lam) - (c - R), self.q, self.h_min)
        left = (a - lam) - t
        out.append((left[1:], left[:-1] - left[1:]))
        t = graded_breakpoints(lam, self.q, self.h_min)
        lo = (a - lam) + t
        hi = (a + lam) - t
        mid = np.concatenate([lo[:-1], hi[::-1]])
        out.append((mid[:-1], np.diff(mid)))
        t = graded_breakpoints((c + R) - (a + lam), self.q, self.h_min)
        right = (a + lam) + t
        out.append((right[:-1], np.diff(right)))
        return out


def coarse_far_grid(ff: FarFieldGeometry, max_cells=10**7):
    """All coarse cells as arrays (z, hhat) of lower corners and side lengths."""
    d = ff.grid.d
    segs = [ff.segments(j) for j in range(d)]
    counts = [[len(s[0]) for s in sg] for sg in segs]
    total = sum(np.prod([counts[j][b[j]] for j in range(d)]) for b in itertools.product(range(3), repeat=d)
                if b != (1,) * d)
    if total > max_cells:
        raise MemoryError(f"{total} coarse cells requested; raise max_cells to enumerate them")
    Z, H = [], []
    for block in itertools.product(range(3), repeat=d):
        if block == (1,) * d:
            continue
        starts = [segs[j][block[j]][0] for j in range(d)]
        widths = [segs[j][block[j]][1] for j in range(d)]
        if any(len(s) == 0 for s in starts):
            continue
        Z.append(np.stack(np.meshgrid(*starts, indexing="ij"), -1).reshape(-1, d))
        H.append(np.stack(np.meshgrid(*widths, indexing="ij"), -1).reshape(-1, d))
    if not Z:
        return np.zeros((0, d)), np.zeros((0, d))
    return np.concatenate(Z), np.concatenate(H)


def box_excluded_offsets(i, d):
    """Cell offsets (relative to the cube of x_0) of the cells covering J and J_k."""
    V = cube_vertices(d)
    _, _, Dc, _ = neighbor_index_sets(d, i)
    offs = [tuple(-V[nu]) for nu in range(2**d)]
    offs += [tuple(V[i] - V[mu]) for mu in Dc]
    return offs


def box_excluded_indices(i, ff: FarFieldGeometry, g: GridSpec = None):
    """Linear indices (over N2) of the box cells inside I_0 and I_k."""
    d = ff.grid.d
    return sorted(linearize(np.asarray(o) + ff.ratio + 1, ff.N2) for o in box_excluded_offsets(i, d))


# ---------------------------------------------------------------------------
# helpers


def _bits(i, d):
    return cube_vertices(d)[i]


def _product_terms(coef, x_factors, y_factors, d):
    """One separable term; factors are lists of vertex indices (products of psi)."""
    p = tuple(poly1d([_bits(v, d)[j] for v in x_factors]) for j in range(d))
    q = tuple(poly1d([_bits(v, d)[j] for v in y_factors]) for j in range(d))
    return SeparableTerm(float(coef), p, q)


def _difference_product_terms(coef, A, Ax, B, Bx, d):
    """Terms of coef (psi_A(y) - psi_Ax(x)) (psi_B(y) - psi_Bx(x))."""
    return [
        _product_terms(coef, [], [A, B], d),
        _product_terms(-coef, [Bx], [A], d),
        _product_terms(-coef, [Ax], [B], d),
        _product_terms(coef, [Ax, Bx], [], d),
    ]


def _poly_eval(p, t):
    return np.polynomial.polynomial.polyval(t, p)


def _merge_atoms(u, w, decimals=12):
    """Sum weights of atoms sitting at (numerically) the same position."""
    key = np.round(u, decimals)
    _, first, inv = np.unique(key, return_index=True, return_inverse=True)
    return u[first], np.bincount(inv.ravel(), weights=w.ravel())


def _tensor_sum(lists, kernel: KernelSpec, scale):
    """sum over tuples of prod_j W_j * profile(scale |u|) for per-dimension lists (u_j, W_j)."""
    d = len(lists)
    if any(len(u) == 0 for u, _ in lists):
        return 0.0
    if kernel.power_law is not None and d <= 3:
        C, beta = kernel.power_law
        args = [np.ascontiguousarray(a, dtype=float) for u, w in lists for a in (u, w)]
        fn = (_accel.tensor_sum1, _accel.tensor_sum2, _accel.tensor_sum3)[d - 1]
        return fn(*args, C, beta, scale)
    # generic fallback: loop over the first dimension, broadcast the rest
    rest_sq = np.zeros(1)
    rest_w = np.ones(1)
    for u, w in lists[1:]:
        rest_sq = (rest_sq[:, None] + (np.asarray(u) ** 2)[None, :]).ravel()
        rest_w = (rest_w[:, None] * np.asarray(w)[None, :]).ravel()
    u0, w0 = lists[0]
    tot = 0.0
    for a in range(len(u0)):
        r = scale * np.sqrt(u0[a] ** 2 + rest_sq)
        tot += w0[a] * float(rest_w @ kernel.profile(r))
    return tot


def _first_far_decomposition(near, far, every):
    """Product sets covering all tuples with at least one 'far' coordinate.

    Yields lists of per-dimension lists: near^p x far x every^(d-p-1).
    """
    d = len(near)
    for p in range(d):
        yield [near[j] for j in range(p)] + [far[p]] + [every[j] for j in range(p + 1, d)]


def _concat(lists):
    return (np.concatenate([u for u, _ in lists]), np.concatenate([w for _, w in lists]))


# ---------------------------------------------------------------------------
# first row


@dataclass
class FirstRow:
    M: np.ndarray
    sing: np.ndarray
    rad: np.ndarray
    dis: np.ndarray
    grid: GridSpec
    kernel_key: dict
    quadrature_key: dict
    farfield_key: dict
    timings: dict

    def header(self):
        return {
            "version": CACHE_VERSION,
            "a": list(self.grid.a), "b": list(self.grid.b), "h": self.grid.h, "L": list(self.grid.L),
            "kernel": self.kernel_key, "quadrature": self.quadrature_key, "farfield": self.farfield_key,
        }


def save_first_row(row: FirstRow, path):
    """JSON header line followed by little-endian float64 arrays M, sing, rad, dis."""
    with open(path, "wb") as fh:
        fh.write((json.dumps(row.header(), sort_keys=True) + "\n").encode())
        for arr in (row.M, row.sing, row.rad, row.dis):
            fh.write(np.asarray(arr, dtype="<f8").tobytes())


def load_first_row(path, expected_header=None):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        data = np.frombuffer(fh.read(), dtype="<f8")
    if header.get("version") != CACHE_VERSION:
        raise ValueError(f"cache version {header.get('version')} != {CACHE_VERSION}")
    if expected_header is not None and json.loads(json.dumps(expected_header, sort_keys=True)) != header:
        raise ValueError("cache header does not match the requested configuration")
    g = GridSpec(header["a"], header["b"], header["h"])
    n = g.total_dofs
    M, sing, rad, dis = (data[j * n:(j + 1) * n].copy() for j in range(4))
    return FirstRow(M, sing, rad, dis, g, header["kernel"], header["quadrature"], header["farfield"], {})


class Assembler:
    """Computes the pieces of the first row for one grid, kernel and rule.

    ``rel_tol`` drives the adaptive cubature of touching cube pairs.
    """

    def __init__(self, grid: GridSpec, kernel: KernelSpec, table: QuadratureTable, ff: FarFieldGeometry,
                 rel_tol=1e-9):
        if not (grid.d == kernel.d == table.d == ff.grid.d):
            raise ValueError("grid, kernel, quadrature and far-field dimensions differ")
        self.grid = grid
        self.kernel = kernel
        self.table = table
        self.ff = ff
        self.rel_tol = rel_tol
        self.d = grid.d
        self.h = grid.h
        self.V = cube_vertices(self.d)
        self._pfar = None

    # -- pair integrals ----------------------------------------------------

    def _touching(self, terms, c):
        pl = self.kernel.power_law
        val, ok = integrate_touching_pair(terms, c, self.kernel.profile, scale=self.h, rel_tol=self.rel_tol,
                                          power=None if pl is None else pl[1])
        if not ok:
            raise FloatingPointError(f"adaptive cubature did not converge for offset {tuple(c)}")
        return val

    def _separated(self, terms, c):
        t = self.table
        u = np.asarray(c, dtype=float) + t.Q - t.V
        k = self.kernel.profile(self.h * np.linalg.norm(u, axis=1))
        tot = 0.0
        for term in terms:
            px = np.prod([_poly_eval(term.p[j], t.V[:, j]) for j in range(self.d)], axis=0)
            qy = np.prod([_poly_eval(term.q[j], t.Q[:, j]) for j in range(self.d)], axis=0)
            tot += term.coef * float((px * qy * k) @ t.W_double)
        return tot

    def _pairs(self, grouped):
        """Sum pair integrals for a dict offset -> list of terms."""
        total = 0.0
        for c, terms in grouped.items():
            if max(abs(v) for v in c) <= 1:
                total += self._touching(terms, c)
            else:
                total += self._separated(terms, c)
        return total

    # -- sing ----------------------------------------------------------------

    def sing(self, i):
        """sing for the vertex offset v_i (i any vertex index)."""
        d = self.d
        D, Dbar, _, kappa = neighbor_index_sets(d, i)
        grouped = {}

        def add(c, terms):
            grouped.setdefault(tuple(int(v) for v in c), []).extend(terms)

        add((0,) * d, _difference_product_terms(len(D), i, i, 0, 0, d))
        for nu in D:
            for mu in D:
                if mu != nu:
                    add(self.V[nu] - self.V[mu], _difference_product_terms(1.0, kappa[mu], kappa[nu], mu, nu, d))
            for mu in Dbar:
                add(self.V[nu] - self.V[mu],
                    [_product_terms(-4.0, [kappa[nu]], [mu], d), _product_terms(4.0, [kappa[nu], nu], [], d)])
        return self.h ** (2 * d) * self._pairs(grouped)

    # -- rad -----------------------------------------------------------------

    def _x_weight_poly(self, i, j):
        return poly1d([0, self.V[i][j]])

    def _box_atoms(self, i, j):
        """Merged 1d atoms y_b - x_a with weights w_a w_b omega_j(x_a)."""
        x, w = self.table.x1d, self.table.w1d
        om = _poly_eval(self._x_weight_poly(i, j), x)
        u = (x[None, :] - x[:, None]).ravel()  # [a, b] -> y_b - x_a
        W = (w[:, None] * om[:, None] * w[None, :]).ravel()
        return _merge_atoms(u, W)

    def rad_box(self, i):
        """Near-box part of rad (cells of size h inside B, outside I_0 and I_k)."""
        d, r = self.d, self.ff.ratio
        offsets = np.arange(-r - 1, r - 1)
        near_o = offsets[np.abs(offsets) <= 1]
        far_o = offsets[np.abs(offsets) > 1]
        near, far, every = [], [], []
        for j in range(d):
            du, dw = self._box_atoms(i, j)

            def lst(os):
                return ((os[:, None] + du[None, :]).ravel(), np.tile(dw, len(os)))

            near.append(lst(near_o))
            far.append(lst(far_o))
            every.append(lst(offsets))
        separated = sum(_tensor_sum(lists, self.kernel, self.h) for lists in _first_far_decomposition(near, far, every))
        excluded = set(box_excluded_offsets(i, d))
        xw = [0, i]
        touching = 0.0
        for o in itertools.product((-1, 0, 1), repeat=d):
            if o in excluded:
                continue
            touching += self._touching([_product_terms(1.0, xw, [], d)], o)
        return touching + separated

    def _far_atoms(self, j):
        """1d atoms (left+right, mid) of the coarse cells in dimension j.

        A cell gets the smallest Gauss order m <= FAR_MAX_ORDER whose error
        bound rho^(-2m) <= FAR_TOL holds, rho being the Bernstein-ellipse
        parameter of the nearest point of the element [c_j, c_j + h] in units
        of the cell's half-width. The 1d distance bounds the true one from
        below, so the choice is conservative. Large cells of a steep grading
        may need more than the n points used on the near cells.
        """
        lo_x = self.ff.center[j]
        hi_x = lo_x + self.h
        n = FAR_MAX_ORDER
        rules = [None] + [gauss_legendre_unit(m) for m in range(1, n + 1)]
        out = []
        for start, width in self.ff.segments(j):
            mid = start + 0.5 * width
            dist = np.maximum(np.maximum(lo_x - mid, mid - hi_x), 0.0)
            r = dist / (0.5 * width)
            with np.errstate(invalid="ignore", divide="ignore"):
                rho = np.where(r > 1, r + np.sqrt(np.maximum(r * r - 1, 0)), 1.0)
                m = np.where(rho > 1, np.ceil(np.log(1 / FAR_TOL) / (2 * np.log(rho))), n)
            m = np.clip(m, 1, n).astype(int)
            pos, wts = [], []
            for mm in np.unique(m):
                sel = m == mm
                x, w = rules[mm]
                pos.append((start[sel, None] + width[sel, None] * x[None, :]).ravel())
                wts.append((width[sel, None] * w[None, :]).ravel())
            out.append((np.concatenate(pos), np.concatenate(wts)) if pos else (np.zeros(0), np.zeros(0)))
        return out

    def p_far(self):
        """P_far at the Gauss nodes of the cube (shared by all vertex offsets)."""
        if self._pfar is not None:
            return self._pfar
        d, h, t = self.d, self.h, self.table
        atoms = [self._far_atoms(j) for j in range(d)]
        c = self.ff.center
        out = np.empty(len(t.X))
        for a, x in enumerate(t.X):
            xp = c + h * x
            mid, outer, every = [], [], []
            for j in range(d):
                lists = [(pos - xp[j], w) for pos, w in atoms[j]]
                mid.append(lists[1])
                outer.append(_concat([lists[0], lists[2]]))
                every.append(_concat(lists))
            out[a] = sum(_tensor_sum(ls, self.kernel, 1.0) for ls in _first_far_decomposition(mid, outer, every))
        self._pfar = out
        return out

    def rad_far(self, i):
        X = self.table.X
        wx = np.prod([_poly_eval(self._x_weight_poly(i, j), X[:, j]) for j in range(self.d)], axis=0)
        return float((self.table.W_single * wx) @ self.p_far())

    def rad(self, i):
        D = neighbor_index_sets(self.d, i)[0]
        return 2 * len(D) * (self.h ** (2 * self.d) * self.rad_box(i) + self.h**self.d * self.rad_far(i))

    # -- dis -----------------------------------------------------------------

    def _dis_pairs(self, z, nus, mus):
        d = self.d
        grouped = {}
        for nu in nus:
            for mu in mus:
                c = tuple(int(v) for v in np.asarray(z) + self.V[nu] - self.V[mu])
                grouped.setdefault(c, []).append(_product_terms(1.0, [nu], [mu], d))
        return -2 * self.h ** (2 * d) * self._pairs(grouped)

    def _dis_atoms(self):
        x, w = self.table.x1d, self.table.w1d
        us, ws = [], []
        for bn in (0, 1):
            for bm in (0, 1):
                pn = _poly_eval(poly1d([bn]), x)
                pm = _poly_eval(poly1d([bm]), x)
                us.append((bn - bm + x[None, :] - x[:, None]).ravel())
                ws.append((w[:, None] * pn[:, None] * w[None, :] * pm[None, :]).ravel())
        return _merge_atoms(np.concatenate(us), np.concatenate(ws))

    def dis_many(self, Z):
        """dis for an array of multi-indices Z (m, d) with max(Z) >= 3."""
        Z = np.asarray(Z, dtype=float)
        du, dw = self._dis_atoms()
        if self.kernel.power_law is not None and self.d <= 3:
            C, beta = self.kernel.power_law
            vals = _accel.shifted_sums(np.ascontiguousarray(Z), du, dw, C, beta, self.h)
        else:
            vals = np.array([_tensor_sum([(z + du, dw) for z in row], self.kernel, self.h) for row in Z])
        return -2 * self.h ** (2 * self.d) * vals

    def dis(self, z):
        """dis for one multi-index z != 0."""
        z = np.asarray(z, dtype=np.int64)
        d = self.d
        if not np.any(z):
            raise ValueError("dis is not defined for k = 0 (dis_0 = 0)")
        if np.max(z) <= 1:
            i = linearize(z, (2,) * d)
            _, Dbar, Dc, _ = neighbor_index_sets(d, i)
            return self._dis_pairs(z, Dbar, Dc)
        if np.max(z) == 2:
            return self._dis_pairs(z, range(2**d), range(2**d))
        return float(self.dis_many(z[None, :])[0])


def assemble_first_row(g: GridSpec, kernel: KernelSpec, t: QuadratureTable, ff: FarFieldGeometry,
                       rel_tol=1e-9, log=None) -> FirstRow:
    """Assemble M = sing + rad + dis for the whole grid.

    Only the d+1 canonical near offsets go through the singular path; every
    other value is obtained from sorted multi-indices (permutation symmetry).
    """
    asm = Assembler(g, kernel, t, ff, rel_tol=rel_tol)
    d, n = g.d, g.total_dofs
    timings = {}
    Z = delinearize(np.arange(n), g.L).reshape(n, d)
    Zs = -np.sort(-Z, axis=1)  # sorted descending
    sing = np.zeros(n)
    rad = np.zeros(n)
    dis = np.zeros(n)

    S, idx_i, _ = canonical_representatives(d)
    near = np.all(Z <= 1, axis=1)
    canon = linearize(Zs[near], (2,) * d) if near.any() else np.zeros(0, int)
    needed = sorted(set(int(c) for c in np.atleast_1d(canon)))

    t0 = time.perf_counter()
    sing_c = {i: asm.sing(i) for i in needed}
    timings["sing"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rad_c = {i: asm.rad(i) for i in needed}
    timings["rad"] = time.perf_counter() - t0
    if log:
        log(f"near values done: sing {timings['sing']:.2f}s, rad {timings['rad']:.2f}s")

    near_idx = np.flatnonzero(near)
    for k, c in zip(near_idx, np.atleast_1d(canon)):
        sing[k] = sing_c[int(c)]
        rad[k] = rad_c[int(c)]

    t0 = time.perf_counter()
    uniq, inv = np.unique(Zs, axis=0, return_inverse=True)
    inv = inv.ravel()
    vals = np.zeros(len(uniq))
    mx = uniq.max(axis=1)
    for m in np.flatnonzero((mx >= 1) & (mx <= 2)):
        vals[m] = asm.dis(uniq[m])
    far = np.flatnonzero(mx >= 3)
    if len(far):
        vals[far] = asm.dis_many(uniq[far])
    dis = vals[inv]
    timings["dis"] = time.perf_counter() - t0
    if log:
        log(f"dis done for {len(uniq)} distinct offsets in {timings['dis']:.2f}s")

    M = sing + rad + dis
    return FirstRow(M, sing, rad, dis, g, kernel.key(), {"n": t.n, "rel_tol": rel_tol}, ff.key(), timings)


def assemble_source(g: GridSpec, f, t: QuadratureTable, chunk=2**16):
    """b_k = h^d sum_nu int_cube f(x_k + h (v - v_nu)) psi_nu(v) dv.

    This is int f phi_k written over the 2^d cubes of the patch; it reduces to
    h^d 2^d int_cube f(x_k + h v) psi_0(v) dv when f is reflection symmetric
    about x_k.
    """
    d, h = g.d, g.h
    V = cube_vertices(d)
    X, W = t.X, t.W_single
    psi = [np.prod(np.where(V[nu] == 1, X, 1 - X), axis=1) for nu in range(2**d)]
    b = np.empty(g.total_dofs)
    for start in range(0, g.total_dofs, chunk):
        idx = np.arange(start, min(start + chunk, g.total_dofs))
        xk = np.asarray(g.a) + h * (delinearize(idx, g.L).reshape(-1, d) + 1)
        acc = np.zeros(len(idx))
        for nu in range(2**d):
            pts = xk[:, None, :] + h * (X - V[nu])[None, :, :]
            vals = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(len(idx), -1)
            if not np.all(np.isfinite(vals)):
                raise FloatingPointError("source function is not finite at a quadrature node")
            acc += vals @ (W * psi[nu])
        b[idx] = h**d * acc
    return b


# spec-level wrappers

def assemble_sing(k, g, kernel, t, ff, rel_tol=1e-9):
    z = delinearize(k, g.L)
    if max(z) > 1 or list(z) != sorted(z, reverse=True):
        raise ValueError(f"index {k} is not a canonical near index")
    return Assembler(g, kernel, t, ff, rel_tol).sing(linearize(z, (2,) * g.d))


def assemble_rad(k, g, kernel, t, ff, rel_tol=1e-9):
    z = delinearize(k, g.L)
    if max(z) > 1 or list(z) != sorted(z, reverse=True):
        raise ValueError(f"index {k} is not a canonical near index")
    return Assembler(g, kernel, t, ff, rel_tol).rad(linearize(z, (2,) * g.d))


def assemble_dis(k, g, kernel, t, ff=None, rel_tol=1e-9):
    if k == 0:
        raise ValueError("dis is not defined for k = 0 (dis_0 = 0)")
    ff = ff if ff is not None else FarFieldGeometry(g, 3 * g.h, T=g.h)
    return Assembler(g, kernel, t, ff, rel_tol).dis(delinearize(k, g.L))
