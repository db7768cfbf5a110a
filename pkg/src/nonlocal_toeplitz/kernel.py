"""Translation-invariant kernels.

A kernel is described by a radial profile sigma(r) and a horizon R, so that
gamma(x, y) = sigma(|x - y|) for |x - y| < R and 0 otherwise. Assembly works
with the profile directly; the horizon only matters through the shape of the
truncated far-field region.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma as _gamma


class KernelSpec:
    """Abstract translation- and rotation-invariant kernel.

    Subclasses implement :meth:`profile`. ``singularity_order`` is the
    exponent beta with sigma(r) ~ r^(-beta) as r -> 0 (0 for bounded kernels).
    """

    singularity_order = 0.0
    power_law = None  # (C, beta) if sigma(r) = C r^(-beta) exactly

    def __init__(self, d, horizon):
        if d < 1:
            raise ValueError("d must be at least 1")
        if not horizon > 0:
            raise ValueError("horizon must be positive")
        self.d = int(d)
        self.horizon = float(horizon)

    def profile(self, r):
        raise NotImplementedError

    def evaluate(self, x, y):
        """gamma(x, y) with the Euclidean horizon cut-off."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y - x, axis=-1)
        if self.singularity_order > 0 and np.any(r == 0):
            raise ValueError("kernel evaluated at coincident points x = y")
        with np.errstate(divide="ignore"):
            val = self.profile(r)
        return np.where(r < self.horizon, val, 0.0)

    def key(self):
        return {"type": type(self).__name__, "d": self.d, "horizon": self.horizon}


def fractional_constant(d, s):
    """c_{d,s} = s 2^{2s} Gamma((d+2)/2) / (Gamma(1/2) Gamma(1-s))."""
    if not 0 < s < 1:
        raise ValueError(f"fraction s must lie in (0, 1), got {s}")
    if d < 1:
        raise ValueError("d must be at least 1")
    return s * 2 ** (2 * s) * _gamma((d + 2) / 2) / (_gamma(0.5) * _gamma(1 - s))


class FractionalKernel(KernelSpec):
    """gamma(x, y) = c / (2 |y - x|^{d+2s}) inside the horizon."""

    def __init__(self, d, s, horizon, constant=None):
        super().__init__(d, horizon)
        if not 0 < s < 1:
            raise ValueError(f"fraction s must lie in (0, 1), got {s}")
        self.s = float(s)
        self.constant = fractional_constant(d, s) if constant is None else float(constant)
        self.singularity_order = d + 2 * self.s
        self.power_law = (0.5 * self.constant, self.singularity_order)

    def profile(self, r):
        return 0.5 * self.constant * np.asarray(r, dtype=float) ** (-self.singularity_order)

    def homogeneity_scale(self, alpha):
        """Factor alpha^{-(d+2s)} with gamma(alpha x, alpha y) = factor * gamma(x, y)."""
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        return alpha ** (-self.singularity_order)

    def key(self):
        k = super().key()
        k.update(s=self.s, constant=self.constant)
        return k


def homogeneity_scale(kernel: FractionalKernel, alpha):
    return kernel.homogeneity_scale(alpha)


def evaluate(kernel: KernelSpec, x, y):
    return kernel.evaluate(x, y)


def tail_integral(kernel: FractionalKernel, T):
    """Closed form of int_{|y| > T} gamma dy for the fractional kernel (no horizon)."""
    d, s = kernel.d, kernel.s
    sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    return 0.5 * kernel.constant * sphere * T ** (-2 * s) / (2 * s)
