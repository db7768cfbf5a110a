"""Compare the 1d solution with the closed form for f = 1 on (-1, 1).

For the fractional Laplacian with zero exterior data, f = 1 gives

    u(x) = Gamma(d/2) / (2^(2s) Gamma(1 + s) Gamma(d/2 + s)) (1 - |x|^2)^s.

The kernel constant used here differs from the one in that formula by
Gamma((d+2s)/2) / Gamma((d+2)/2), so u is rescaled by that ratio. The
far-field truncation at T = 2^10 leaves a small bias.

Run: python3 demos/closed_form_1d.py
"""

from math import gamma

import numpy as np

from nonlocal_toeplitz.driver import RunConfig, run_solve

d, s = 1, 0.7
exact_c = gamma(d / 2) / (2 ** (2 * s) * gamma(1 + s) * gamma(d / 2 + s))
exact_c *= gamma((d + 2 * s) / 2) / gamma((d + 2) / 2)

for k in (6, 8, 10):
    cfg = RunConfig(d=1, a=[-1.0], b=[1.0], h=2.0**-k, s=s, lam=5.0, gauss_n=7)
    res = run_solve(cfg, write=False)
    x = res.grid.points()[:, 0]
    ue = exact_c * (1 - x**2) ** s
    err = np.max(np.abs(res.u - ue)) / ue.max()
    print(f"h=2^-{k:<3d} dofs {res.report.dofs:5d}  CG its {res.report.cg_iterations:4d}  max rel. error {err:.2e}")
