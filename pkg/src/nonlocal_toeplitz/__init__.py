"""Nonlocal (fractional) diffusion on hyperrectangles with multilevel Toeplitz stiffness matrices.

Only the first row of the stiffness matrix is assembled; products with the
full matrix go through a circulant embedding and the FFT, and the Galerkin
system is solved by conjugate gradients.
"""

__version__ = "0.1.0"

from .indexing import GridSpec, delinearize, linearize  # noqa: E402
from .kernel import FractionalKernel, fractional_constant  # noqa: E402
from .toeplitz import ToeplitzOperator, dense_reconstruct, embed  # noqa: E402
from .solver import CgResult, cg_solve, levinson_solve_1d  # noqa: E402

__all__ = [
    "GridSpec", "linearize", "delinearize", "FractionalKernel", "fractional_constant",
    "ToeplitzOperator", "embed", "dense_reconstruct", "CgResult", "cg_solve", "levinson_solve_1d",
]
