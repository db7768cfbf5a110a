"""Experiment driver: configuration, solves, convergence studies and output files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import FarFieldGeometry, assemble_first_row, assemble_source, load_first_row, save_first_row
from .indexing import GridSpec
from .kernel import FractionalKernel
from .quadrature import QuadratureTable
from .solver import BreakdownError, cg_solve, default_max_it, levinson_solve_1d
from .toeplitz import ToeplitzOperator

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


BUILTIN_SOURCES = {
    "one": lambda x: np.ones(len(x)),
    "x0": lambda x: x[:, 0].copy(),
}


def make_source(spec, d):
    """Callable f(points (m, d)) -> (m,) for a builtin name or a numpy expression in x, x0, x1, ..."""
    if spec in BUILTIN_SOURCES:
        return BUILTIN_SOURCES[spec]
    if not isinstance(spec, str) or not spec.strip():
        raise ConfigError(f"source must be one of {sorted(BUILTIN_SOURCES)} or an expression, got {spec!r}")
    try:
        code = compile(spec, "<source>", "eval")
    except SyntaxError as e:
        raise ConfigError(f"cannot parse source expression {spec!r}: {e.msg}") from None

    def f(x):
        env = {"np": np, "pi": np.pi, "x": x}
        env.update({f"x{j}": x[:, j] for j in range(x.shape[1])})
        return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, env), dtype=float), (len(x),))

    try:
        f(np.full((2, d), 0.5))
    except Exception as e:  # noqa: BLE001 - any failure here is a config problem
        raise ConfigError(f"source expression {spec!r} cannot be evaluated: {e}") from None
    return f


def parse_number(v):
    """Float from a number or a string such as '2^-9', '2**-9' or '1e-2'."""
    if isinstance(v, (int, float)):
        return float(v)
    t = str(v).strip().replace("^", "**")
    if "**" in t:
        base, exp = t.split("**", 1)
        return float(base) ** float(exp)
    return float(t)


@dataclass
class RunConfig:
    """All inputs of a solve or a study; ``h`` may be a list for studies."""

    d: int = 1
    a: list = None
    b: list = None
    h: object = 2.0**-5
    s: float = 0.5
    source: str = "one"
    lam: float = 1.0
    T: float = 2.0**10
    q: float = 1.5
    h_min: float = 1e-2
    gauss_n: int = 6
    tol: float = 1e-12
    max_it: int = None
    out: str = "out"
    threads: int = None
    solver: str = "cg"
    cg_stop: str = "recurrence"
    snap_domain: bool = True
    cache_dir: str = None
    slices: int = 9

    def __post_init__(self):
        if self.a is None:
            self.a = [0.0] * int(self.d)
        if self.b is None:
            self.b = [1.0] * int(self.d)
        if self.threads is None:
            self.threads = os.cpu_count() or 1

    @property
    def h_list(self):
        hs = self.h if isinstance(self.h, (list, tuple)) else [self.h]
        return [parse_number(v) for v in hs]

    def validate(self):
        try:
            self.d = int(self.d)
            self.a = [float(v) for v in np.atleast_1d(self.a)]
            self.b = [float(v) for v in np.atleast_1d(self.b)]
            for name in ("s", "lam", "T", "q", "h_min", "tol"):
                setattr(self, name, float(parse_number(getattr(self, name))))
            self.gauss_n = int(self.gauss_n)
            self.threads = int(self.threads)
            self.slices = int(self.slices)
            if self.max_it is not None:
                self.max_it = int(self.max_it)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"malformed configuration value: {e}") from None
        if self.d not in (1, 2, 3):
            raise ConfigError(f"dimension d={self.d} unsupported; use 1, 2 or 3")
        if len(self.a) != self.d or len(self.b) != self.d:
            raise ConfigError(f"domain-a and domain-b need {self.d} entries each, got {self.a} and {self.b}")
        if any(bi <= ai for ai, bi in zip(self.a, self.b)):
            raise ConfigError(f"domain must satisfy a < b componentwise, got a={self.a}, b={self.b}")
        if not self.h_list or any(not v > 0 for v in self.h_list):
            raise ConfigError(f"grid sizes must be positive, got {self.h}")
        if not 0 < self.s < 1:
            raise ConfigError(f"fraction s must lie in (0, 1), got {self.s}")
        if self.q < 1:
            raise ConfigError(f"coarsen-q must be >= 1, got {self.q}")
        if not self.h_min > 0:
            raise ConfigError(f"hmin must be positive, got {self.h_min}")
        if not 1 <= self.gauss_n <= 64:
            raise ConfigError(f"gauss-n must lie in [1, 64], got {self.gauss_n}")
        if not 0 < self.tol < 1:
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.max_it is not None and self.max_it < 1:
            raise ConfigError(f"max-it must be positive, got {self.max_it}")
        if self.threads < 1:
            raise ConfigError(f"threads must be positive, got {self.threads}")
        if self.solver not in ("cg", "levinson"):
            raise ConfigError(f"solver must be 'cg' or 'levinson', got {self.solver!r}")
        if self.cg_stop not in ("recurrence", "true"):
            raise ConfigError(f"cg_stop must be 'recurrence' or 'true', got {self.cg_stop!r}")
        if self.solver == "levinson" and self.d != 1:
            raise ConfigError("the Levinson solver is 1d only; use --solver cg")
        for h in self.h_list:
            self.grid(h)
            if not self.lam > 2 * h:
                raise ConfigError(f"lambda={self.lam} must exceed 2h={2 * h}")
            if not self.T > self.lam:
                raise ConfigError(f"truncation-T={self.T} must exceed lambda={self.lam}")
            if self.T < h:
                raise ConfigError(f"truncation-T={self.T} must be at least h={h}")
        make_source(self.source, self.d)
        return self

    def grid(self, h):
        try:
            if self.snap_domain:
                return GridSpec.snapped(self.a, self.b, h)
            return GridSpec(tuple(self.a), tuple(self.b), h)
        except ValueError as e:
            raise ConfigError(f"grid with h={h}: {e}") from None

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown configuration keys {unknown}; valid keys are {sorted(names)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes):
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass
class SolveReport:
    dofs: int
    h: float
    L: list
    domain_b: list
    cg_iterations: int
    converged: bool
    final_residual: float
    true_residual: float
    timings: dict
    solve_time: float
    config: dict
    version: str = __version__
    solver: str = "cg"
    threads: int = 1
    lambda_requested: float = None
    lambda_used: float = None
    lambda_adjusted: bool = False
    domain_adjusted: bool = False
    energy_error: float = None
    rate: float = None

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def without_timings(self):
        d = self.to_dict()
        d.pop("timings")
        d.pop("solve_time")
        return d


@dataclass
class SolveResult:
    report: SolveReport
    u: np.ndarray
    grid: GridSpec
    operator: ToeplitzOperator = field(repr=False, default=None)


def _cache_path(cache_dir, header):
    key = hashlib.sha1(json.dumps(header, sort_keys=True).encode()).hexdigest()[:16]
    return Path(cache_dir) / f"first_row_{key}.bin"


def first_row_for(cfg: RunConfig, g: GridSpec):
    """Assemble (or load from the cache) the first row for one grid."""
    try:
        ff = FarFieldGeometry(g, cfg.lam, T=cfg.T, q=cfg.q, h_min=cfg.h_min)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    kernel = FractionalKernel(g.d, cfg.s, ff.R)
    table = QuadratureTable(g.d, cfg.gauss_n)
    header = None
    if cfg.cache_dir:
        header = {"version": 1, "a": list(g.a), "b": list(g.b), "h": g.h, "L": list(g.L), "kernel": kernel.key(),
                  "quadrature": {"n": table.n, "rel_tol": 1e-9}, "farfield": ff.key()}
        path = _cache_path(cfg.cache_dir, header)
        if path.exists():
            try:
                row = load_first_row(path, header)
                log.info("first row loaded from %s", path)
                return row, ff, kernel, table
            except ValueError as e:
                log.warning("ignoring cache %s: %s", path, e)
    row = assemble_first_row(g, kernel, table, ff, log=log.info)
    if not np.all(np.isfinite(row.M)):
        raise NumericalError(f"assembled first row for h={g.h} is not finite")
    if cfg.cache_dir:
        Path(cfg.cache_dir).mkdir(parents=True, exist_ok=True)
        save_first_row(row, _cache_path(cfg.cache_dir, row.header()))
    return row, ff, kernel, table


def run_solve(cfg: RunConfig, h=None, out_dir=None, write=True) -> SolveResult:
    """Assemble, solve and (optionally) write solution.csv and report.json."""
    cfg.validate()
    h = cfg.h_list[0] if h is None else float(h)
    g = cfg.grid(h)
    row, ff, kernel, table = first_row_for(cfg, g)
    op = ToeplitzOperator(row.M, shape=g.L, real_fft=True)
    t0 = time.perf_counter()
    b = assemble_source(g, make_source(cfg.source, g.d), table)
    t_src = time.perf_counter() - t0
    try:
        if cfg.solver == "levinson":
            t0 = time.perf_counter()
            u = levinson_solve_1d(row.M, b)
            true_res = float(np.linalg.norm(op.matvec(u) - b) / np.linalg.norm(b))
            its, res, solve_time = 0, true_res, time.perf_counter() - t0
            converged = np.isfinite(true_res)
        else:
            max_it = cfg.max_it if cfg.max_it is not None else default_max_it(g.total_dofs)
            cg = cg_solve(op.matvec, b, tol=cfg.tol, max_it=max_it, stop=cfg.cg_stop)
            u, its, converged, solve_time = cg.x, cg.iterations, cg.converged, cg.wall_time
            res, true_res = cg.final_residual, cg.true_residual
    except (BreakdownError, FloatingPointError) as e:
        raise NumericalError(f"solve for h={h} failed: {e}") from None
    if not converged:
        raise NumericalError(f"{cfg.solver} did not converge for h={h} within {its} iterations: "
                             f"relative residual {true_res:.3e} > tol {cfg.tol}")
    timings = dict(row.timings)
    timings["source"] = t_src
    timings["assembly"] = sum(timings.values())
    report = SolveReport(
        dofs=g.total_dofs, h=g.h, L=list(g.L), domain_b=list(g.b), cg_iterations=int(its), converged=True,
        final_residual=float(res), true_residual=float(true_res), timings=timings, solve_time=float(solve_time), config=cfg.to_dict(),
        solver=cfg.solver, threads=cfg.threads, lambda_requested=ff.lam_requested, lambda_used=ff.lam,
        lambda_adjusted=bool(ff.adjusted), domain_adjusted=any(abs(x - y) > 0 for x, y in zip(g.b, cfg.b)),
    )
    result = SolveResult(report, u, g, op)
    if write:
        out = Path(out_dir if out_dir is not None else cfg.out)
        with _artifacts(out, ["solution.csv", "report.json"] + _slice_names(g, cfg.slices)):
            emit_plot_data(result, out, slices=cfg.slices)
            (out / "report.json").write_text(report.to_json())
    return result


class _artifacts:
    """Remove the listed files from ``out`` if the block fails."""

    def __init__(self, out, names):
        self.out = Path(out)
        self.names = names

    def __enter__(self):
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"cannot create output directory {self.out}: {e.strerror}") from None
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for n in self.names:
                p = self.out / n
                if p.exists():
                    p.unlink()
        return False


# ---------------------------------------------------------------------------
# prolongation and studies


def _nested_levels(g_coarse: GridSpec, g_fine: GridSpec):
    if g_coarse.d != g_fine.d or g_coarse.a != g_fine.a or g_coarse.b != g_fine.b:
        raise ValueError("grids cover different domains")
    ratio = Fraction(g_coarse.h) / Fraction(g_fine.h)
    if ratio.denominator != 1 or ratio.numerator & (ratio.numerator - 1):
        raise ValueError(f"h_coarse/h_fine = {float(ratio)} is not a power of two")
    return int(ratio.numerator).bit_length() - 1


def prolongate(u_coarse, g_coarse: GridSpec, g_fine: GridSpec):
    """Multilinear interpolation to a dyadically refined grid, zero outside the domain."""
    levels = _nested_levels(g_coarse, g_fine)
    u = np.asarray(u_coarse, dtype=float).reshape(g_coarse.L)
    for _ in range(levels):
        u = np.pad(u, 1)  # boundary values are zero
        for ax in range(u.ndim):
            n = u.shape[ax]
            fine_shape = list(u.shape)
            fine_shape[ax] = 2 * n - 1
            v = np.empty(fine_shape)
            idx = [slice(None)] * u.ndim
            idx[ax] = slice(0, None, 2)
            v[tuple(idx)] = u
            idx[ax] = slice(1, None, 2)
            lo = [slice(None)] * u.ndim
            hi = [slice(None)] * u.ndim
            lo[ax] = slice(0, n - 1)
            hi[ax] = slice(1, n)
            v[tuple(idx)] = 0.5 * (u[tuple(lo)] + u[tuple(hi)])
            u = v
        u = u[tuple(slice(1, -1) for _ in range(u.ndim))]
    if u.shape != tuple(g_fine.L):
        raise ValueError("prolongated shape does not match the fine grid")
    return u.reshape(-1)


def energy_error(op: ToeplitzOperator, e):
    """sqrt(e^T A e / 2)."""
    val = 0.5 * float(e @ op.matvec(e))
    if val < 0:
        raise NumericalError(f"negative energy {val:.3e}: the operator is not positive definite")
    return math.sqrt(val)


def convergence_study(cfg: RunConfig, out_dir=None, write=True):
    """Solve every level of cfg.h (descending) and measure errors against the finest solution."""
    cfg.validate()
    hs = cfg.h_list
    if len(hs) < 2:
        raise ConfigError("a study needs at least two grid sizes")
    if any(hs[i + 1] >= hs[i] for i in range(len(hs) - 1)):
        raise ConfigError(f"study grid sizes must be strictly descending, got {hs}")
    grids = [cfg.grid(h) for h in hs]
    for gc, gf in zip(grids, grids[1:]):
        try:
            _nested_levels(gc, gf)
        except ValueError as e:
            raise ConfigError(f"grids h={gc.h} and h={gf.h} are not nested: {e}") from None
    out = Path(out_dir if out_dir is not None else cfg.out)
    results = []
    for i, h in enumerate(hs):
        log.info("study level %d/%d: h=%g", i + 1, len(hs), h)
        r = run_solve(cfg, h=h, out_dir=out / f"level_{i}", write=write)
        if i < len(hs) - 1:
            r.operator = None  # only the finest operator is needed
        results.append(r)
    fine = results[-1]
    errors = []
    for r in results[:-1]:
        e = prolongate(r.u, r.grid, fine.grid) - fine.u
        errors.append(energy_error(fine.operator, e))
    for i, r in enumerate(results[:-1]):
        r.report.energy_error = errors[i]
        if i > 0 and errors[i] > 0:
            r.report.rate = math.log2(errors[i - 1] / errors[i]) / math.log2(hs[i - 1] / hs[i])
    reports = [r.report for r in results]
    if write:
        with _artifacts(out, ["study.csv", "study.json"]):
            write_study_csv(reports, out / "study.csv")
            (out / "study.json").write_text(json.dumps([rep.to_dict() for rep in reports], indent=2, sort_keys=True))
    return results


def _fmt(v):
    return "-" if v is None else repr(float(v))


def write_study_csv(reports, path):
    lines = ["h,dofs,cg_iterations,energy_error,rate,assembly_time,solve_time"]
    for r in reports:
        lines.append(f"{r.h!r},{r.dofs},{r.cg_iterations},{_fmt(r.energy_error)},{_fmt(r.rate)},"
                     f"{r.timings.get('assembly', 0.0)!r},{r.solve_time!r}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# plot data


def _slice_levels(g: GridSpec, slices):
    n = g.L[-1]
    return sorted(set(int(round(v)) for v in np.linspace(0, n - 1, min(slices, n))))


def _slice_names(g, slices):
    if g.d != 3:
        return []
    return [f"slice_{j}.csv" for j in range(len(_slice_levels(g, slices)))]


def emit_plot_data(result: SolveResult, out_dir, slices=9):
    """solution.csv (k, x0.., u) and, in 3d, slice_<j>.csv along the last axis.

    Slice files list x0, x1, u with a blank line after each x0 row, the block
    layout gnuplot's splot expects (``set datafile separator ','``).
    """
    out = Path(out_dir)
    g = result.grid
    pts = g.points().reshape(-1, g.d)
    u = result.u
    cols = ",".join(["k"] + [f"x{j}" for j in range(g.d)] + ["u"])
    lines = [cols]
    for k in range(g.total_dofs):
        lines.append(",".join([str(k)] + [repr(float(v)) for v in pts[k]] + [repr(float(u[k]))]))
    files = [out / "solution.csv"]
    try:
        files[0].write_text("\n".join(lines) + "\n")
        if g.d == 3:
            U = u.reshape(g.L)
            for j, lev in enumerate(_slice_levels(g, slices)):
                x2 = g.a[2] + g.h * (lev + 1)
                rows = [f"# x2 = {x2!r}", "x0,x1,u"]
                for i0 in range(g.L[0]):
                    x0 = g.a[0] + g.h * (i0 + 1)
                    for i1 in range(g.L[1]):
                        rows.append(f"{x0!r},{g.a[1] + g.h * (i1 + 1)!r},{float(U[i0, i1, lev])!r}")
                    rows.append("")
                p = out / f"slice_{j}.csv"
                p.write_text("\n".join(rows) + "\n")
                files.append(p)
    except OSError as e:
        raise OSError(f"cannot write plot data to {out}: {e.strerror}") from None
    return files


# ---------------------------------------------------------------------------
# oracle comparison


ORACLE_SIZES = {1: (7,), 2: (3, 3), 3: (3, 3, 3)}
# far-grid grading per dimension, as in the table configs (3d at q = 1.5 takes half an hour)
ORACLE_Q = {1: 1.5, 2: 1.5, 3: 3.0}


def oracle_check(dims=(1, 2, 3), s=0.5, h=0.25, lam=1.0, T=8.0, gauss_n=6, tol=1e-5):
    """Compare the reconstructed dense matrix with the independent oracle on small grids."""
    from . import oracle
    from .toeplitz import dense_reconstruct

    out = {}
    for d in dims:
        L = ORACLE_SIZES[d]
        g = GridSpec((0.0,) * d, tuple((n + 1) * h for n in L), h)
        ff = FarFieldGeometry(g, lam, T=T, q=ORACLE_Q[d])
        t0 = time.perf_counter()
        row = assemble_first_row(g, FractionalKernel(d, s, ff.R), QuadratureTable(d, gauss_n), ff)
        A = dense_reconstruct(ToeplitzOperator(row.M, shape=g.L))
        ref = oracle.dense_matrix(g.points().reshape(-1, d), h, s, ff.R)
        err = float(np.max(np.abs(A - ref) / np.abs(ref)))
        out[d] = {"L": list(L), "q": ORACLE_Q[d], "max_rel_error": err, "passed": err <= tol, "seconds": time.perf_counter() - t0}
    return out
