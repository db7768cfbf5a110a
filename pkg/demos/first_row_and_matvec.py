"""Assemble the first row of a small 2d problem and use it three ways.

1. rebuild the dense matrix and look at its structure,
2. multiply through the FFT and compare with the dense product,
3. solve with CG.

Run: python3 demos/first_row_and_matvec.py
"""

import numpy as np

from nonlocal_toeplitz.assembly import FarFieldGeometry, assemble_first_row, assemble_source
from nonlocal_toeplitz.indexing import GridSpec
from nonlocal_toeplitz.kernel import FractionalKernel
from nonlocal_toeplitz.quadrature import QuadratureTable
from nonlocal_toeplitz.solver import cg_solve
from nonlocal_toeplitz.toeplitz import ToeplitzOperator

g = GridSpec((0.0, 0.0), (1.0, 1.0), 2.0**-4)
ff = FarFieldGeometry(g, lam=0.5, T=64.0)
kernel = FractionalKernel(2, s=0.4, horizon=ff.R)
table = QuadratureTable(2, 6)
row = assemble_first_row(g, kernel, table, ff)
print(f"grid {g.L}, {g.total_dofs} unknowns; assembly {sum(row.timings.values()):.1f}s")
print("first entries of M:", np.array2string(row.M[:4], precision=4))
# the near entries carry sing and rad, far entries only dis
print("sing/rad/dis at k=1:", row.sing[1], row.rad[1], row.dis[1])

op = ToeplitzOperator(row.M, shape=g.L)
A = op.dense()
print("symmetric:", np.array_equal(A, A.T), " smallest eigenvalue:", np.linalg.eigvalsh(A)[0])
# positive row sums: the constraint outside the domain acts like a sink
print("min row sum:", A.sum(axis=1).min())

x = np.random.default_rng(0).normal(size=g.total_dofs)
print("FFT vs dense product, rel. error:", np.linalg.norm(op @ x - A @ x) / np.linalg.norm(A @ x))

b = assemble_source(g, lambda p: np.ones(len(p)), table)
res = cg_solve(op.matvec, b, tol=1e-12, stop="recurrence")
print(f"CG: {res.iterations} iterations, true residual {res.true_residual:.1e}")
u = res.x.reshape(g.L)
print("u at the centre:", u[g.L[0] // 2, g.L[1] // 2], " max:", u.max())
print("symmetry of u under x0 <-> x1:", np.abs(u - u.T).max())
# the condition number grows like h^(-2s)
print(f"cond(A) = {np.linalg.cond(A):.2f}, h^(-2s) = {g.h ** -0.8:.2f}")
