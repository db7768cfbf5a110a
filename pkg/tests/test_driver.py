import json

import numpy as np
import pytest

from nonlocal_toeplitz.driver import (
    ConfigError, NumericalError, RunConfig, SolveReport, convergence_study, make_source, parse_number, prolongate,
    run_solve,
)
from nonlocal_toeplitz.indexing import GridSpec


def small(**kw):
    base = dict(d=1, a=[-1.0], b=[1.0], h=2.0**-5, s=0.6, lam=0.5, T=8.0, gauss_n=5)
    base.update(kw)
    return RunConfig(**base)


def test_parse_number():
    assert parse_number("2^-9") == 2.0**-9
    assert parse_number("2**-3") == 0.125
    assert parse_number("1e-2") == 0.01
    assert parse_number(3) == 3.0


def test_sources():
    x = np.array([[0.5, 2.0], [1.0, 3.0]])
    assert make_source("one", 2)(x).tolist() == [1, 1]
    assert make_source("x0", 2)(x).tolist() == [0.5, 1.0]
    assert np.allclose(make_source("np.sin(pi*x0)*x1", 2)(x), np.sin(np.pi * x[:, 0]) * x[:, 1])
    assert make_source("2", 2)(x).tolist() == [2, 2]
    for bad in ("x0 +", "", "open('f')", "x7"):
        with pytest.raises(ConfigError):
            make_source(bad, 2)


@pytest.mark.parametrize("change", [
    dict(d=4), dict(s=1.0), dict(s=0.0), dict(b=[-2.0]), dict(a=[0.0, 0.0]), dict(h=0.3), dict(lam=0.05),
    dict(T=0.25), dict(q=0.5), dict(h_min=0), dict(gauss_n=0), dict(tol=0), dict(max_it=0), dict(threads=0),
    dict(solver="lu"), dict(cg_stop="never"), dict(source="x0 +"), dict(d=2, a=[0, 0], b=[1, 1], solver="levinson"),
    dict(s="abc"),
])
def test_validation_rejects(change):
    with pytest.raises(ConfigError):
        small(**change).validate()


def test_config_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"d": 1, "a": [-1], "b": [1], "h": "2^-5", "s": 0.6}))
    cfg = RunConfig.load(p).validate()
    assert cfg.h_list == [2.0**-5]
    p.write_text(json.dumps({"dim": 1}))
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.load(p)
    p.write_text("{")
    with pytest.raises(ConfigError):
        RunConfig.load(p)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")
    assert cfg.replace(s=None, lam=2.0).lam == 2.0


@pytest.mark.parametrize("cfg,dofs", [
    (dict(d=1, a=[-1], b=[1]), {9: 1023, 12: 8191}),
    (dict(d=2, a=[0, 0], b=[1, 0.2]), {8: 12750, 9: 51611}),
    (dict(d=3, a=[0, 0, 0], b=[1, 1, 1]), {5: 29791, 6: 250047}),
])
def test_table_dof_counts(cfg, dofs):
    c = RunConfig(**cfg)
    for k, n in dofs.items():
        g = c.grid(2.0**-k)
        assert g.total_dofs == n == int(np.prod([Ni - 1 for Ni in g.N]))


def test_prolongate_examples():
    gc = GridSpec((0.0,), (1.0,), 0.25)
    gf = GridSpec((0.0,), (1.0,), 0.125)
    u = prolongate(np.ones(3), gc, gf)
    assert u.tolist() == [0.5, 1, 1, 1, 1, 1, 0.5]
    hat = np.array([0.0, 1.0, 0.0])
    assert prolongate(hat, gc, gf).tolist() == [0, 0, 0.5, 1, 0.5, 0, 0]
    # 2d: coarse values copied bitwise at coarse nodes, hat reproduced exactly
    gc2 = GridSpec((0.0, 0.0), (1.0, 0.5), 0.125)
    gf2 = GridSpec((0.0, 0.0), (1.0, 0.5), 0.0625)
    r = np.random.default_rng(0).normal(size=gc2.total_dofs)
    uf = prolongate(r, gc2, gf2).reshape(gf2.L)
    assert np.array_equal(uf[1::2, 1::2], r.reshape(gc2.L))
    e = np.zeros(gc2.L)
    e[3, 1] = 1.0
    uf = prolongate(e.ravel(), gc2, gf2)
    P = gf2.points()
    xk = np.array([0.5, 0.25])
    assert np.allclose(uf, np.prod(np.maximum(0, 1 - np.abs(P - xk) / 0.125), axis=1), atol=1e-15)
    # two levels at once
    g4 = GridSpec((0.0,), (1.0,), 2.0**-5)
    assert prolongate(np.ones(3), gc, g4).shape == (31,)
    with pytest.raises(ValueError):
        prolongate(np.ones(3), gc, GridSpec((0.0,), (2.0,), 0.125))


def test_solve_outputs_and_determinism(tmp_path):
    cfg = small(out=str(tmp_path / "a"))
    r1 = run_solve(cfg)
    r2 = run_solve(cfg.replace(out=str(tmp_path / "b")))
    assert r1.report.dofs == 63 and r1.report.converged
    d1, d2 = r1.report.without_timings(), r2.report.without_timings()
    assert d1.pop("config")["out"] != d2.pop("config")["out"]
    assert d1 == d2
    assert np.array_equal(r1.u, r2.u)
    a, b = (tmp_path / "a" / "solution.csv").read_bytes(), (tmp_path / "b" / "solution.csv").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0] == "k,x0,u" and len(lines) == 64
    rep = SolveReport.from_json((tmp_path / "a" / "report.json").read_text())
    assert rep == r1.report
    assert rep.threads == cfg.threads and rep.version
    assert r1.report.true_residual < 1e-10


def test_solution_is_symmetric_and_positive(tmp_path):
    r = run_solve(small(out=str(tmp_path)), write=False)
    assert np.all(r.u > 0)
    assert np.allclose(r.u, r.u[::-1], rtol=1e-9)


def test_levinson_path(tmp_path):
    cg = run_solve(small(out=str(tmp_path / "cg")), write=False)
    lv = run_solve(small(out=str(tmp_path / "lv"), solver="levinson"), write=False)
    assert lv.report.cg_iterations == 0 and lv.report.solver == "levinson"
    assert np.linalg.norm(lv.u - cg.u) <= 1e-8 * np.linalg.norm(lv.u)


def test_lambda_and_domain_adjustment_recorded(tmp_path):
    r = run_solve(small(lam=0.51, b=[1.01], out=str(tmp_path)), write=False)
    assert r.report.lambda_adjusted and r.report.lambda_used == 0.5 and r.report.lambda_requested == 0.51
    assert r.report.domain_adjusted and r.report.domain_b == [1.0]


def test_failure_removes_artifacts(tmp_path):
    with pytest.raises(NumericalError):
        run_solve(small(max_it=2, out=str(tmp_path)))
    assert not (tmp_path / "solution.csv").exists() and not (tmp_path / "report.json").exists()


def test_study(tmp_path):
    cfg = small(h=[2.0**-4, 2.0**-5, 2.0**-6, 2.0**-7], out=str(tmp_path))
    res = convergence_study(cfg)
    reps = [r.report for r in res]
    errs = [r.energy_error for r in reps[:-1]]
    assert reps[-1].energy_error is None and reps[-1].rate is None and reps[0].rate is None
    assert all(e2 < 1.05 * e1 for e1, e2 in zip(errs, errs[1:]))
    for i in (1, 2):
        assert reps[i].rate == pytest.approx(np.log2(errs[i - 1] / errs[i]))
    lines = (tmp_path / "study.csv").read_text().splitlines()
    assert lines[0] == "h,dofs,cg_iterations,energy_error,rate,assembly_time,solve_time"
    assert len(lines) == 5 and lines[-1].split(",")[3:5] == ["-", "-"]
    assert len(json.loads((tmp_path / "study.json").read_text())) == 4
    assert (tmp_path / "level_3" / "solution.csv").exists()


@pytest.mark.parametrize("hs", [[2.0**-5], [2.0**-5, 2.0**-4], [2.0**-4, 0.05]])
def test_study_rejects(hs, tmp_path):
    with pytest.raises(ConfigError):
        convergence_study(small(h=hs, out=str(tmp_path)))


@pytest.mark.slow
def test_3d_slices(tmp_path):
    cfg = RunConfig(d=3, h=0.125, s=0.4, lam=0.5, T=4.0, gauss_n=3, out=str(tmp_path))
    run_solve(cfg)
    files = sorted(tmp_path.glob("slice_*.csv"))
    assert len(files) == 7  # only 7 interior x2 levels exist at h = 1/8
    cfg9 = RunConfig(d=3, h=0.0625, s=0.4, lam=0.5, T=4.0, gauss_n=3, out=str(tmp_path / "f"))
    run_solve(cfg9)
    files = sorted((tmp_path / "f").glob("slice_*.csv"))
    assert len(files) == 9
    levels = set()
    for f in files:
        text = f.read_text().splitlines()
        assert text[0].startswith("# x2 = ") and text[1] == "x0,x1,u"
        levels.add(float(text[0].split("=")[1]))
        rows = [t for t in text[2:] if t]
        assert len(rows) == 15 * 15
    assert min(levels) == 0.0625 and max(levels) == 1 - 0.0625
    assert len((tmp_path / "f" / "solution.csv").read_text().splitlines()) == 15**3 + 1


def test_cache_reuse(tmp_path):
    cfg = small(cache_dir=str(tmp_path / "cache"), out=str(tmp_path / "o"))
    r1 = run_solve(cfg, write=False)
    assert len(list((tmp_path / "cache").iterdir())) == 1
    r2 = run_solve(cfg, write=False)
    assert np.array_equal(r1.operator.t, r2.operator.t)
