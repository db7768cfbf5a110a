"""Symmetric-level multilevel Toeplitz operators and their FFT product.

The matrix is stored as the tensor t of shape L with a_ij = t(|i - j|).
For products it is embedded in a circulant of shape 2L whose first column c
follows the hat rule

    i^ = i        if i < L
         0        if i = L
         2L - i   otherwise

so that the circulant is diagonalized by the d-dimensional DFT of length 2L
per axis. The eigenvalues are computed once and cached.
"""

from __future__ import annotations

import numpy as np

DENSE_CAP = 4096


def hat_index(i, L):
    i = np.asarray(i)
    return np.where(i < L, i, np.where(i == L, 0, 2 * L - i))


def embed(t):
    """Circulant first column of shape 2L from the Toeplitz tensor t of shape L."""
    t = np.asarray(t)
    if t.ndim == 0 or min(t.shape) < 1:
        raise ValueError("t must have at least one entry per axis")
    idx = np.ix_(*[hat_index(np.arange(2 * L), L) for L in t.shape])
    return t[idx]


class ToeplitzOperator:
    """Symmetric-level d-level Toeplitz matrix given by its first row.

    ``t`` may be the tensor of shape ``L`` or a flat first row together with
    ``shape``. With ``real_fft=True`` the product uses real-to-complex
    transforms, which gives the same result with about half the work.
    """

    def __init__(self, t, shape=None, real_fft=False):
        t = np.array(t, dtype=float)
        if shape is not None:
            shape = tuple(int(v) for v in shape)
            if t.size != int(np.prod(shape)):
                raise ValueError(f"first row of length {t.size} does not match shape {shape}")
            t = t.reshape(shape)
        if t.ndim == 0:
            raise ValueError("t must be at least one-dimensional")
        if not np.all(np.isfinite(t)):
            raise ValueError("t contains non-finite values")
        t.setflags(write=False)
        self._t = t
        self.real_fft = bool(real_fft)
        self._lam = None
        self._lam_max = None

    @property
    def t(self):
        return self._t

    @property
    def shape(self):
        return self._t.shape

    @property
    def d(self):
        return self._t.ndim

    @property
    def size(self):
        return self._t.size

    @property
    def spectrum(self):
        """Eigenvalues of the embedded circulant (computed on first use)."""
        if self._lam is None:
            c = embed(self._t)
            lam = np.fft.rfftn(c) if self.real_fft else np.fft.fftn(c)
            lam.setflags(write=False)
            self._lam = lam
        return self._lam

    @property
    def spectrum_max(self):
        if self._lam_max is None:
            self._lam_max = float(np.max(np.abs(self.spectrum)))
        return self._lam_max

    def matvec(self, x, check_imag=True):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.size,):
            raise ValueError(f"vector of length {self.size} expected, got shape {x.shape}")
        L = self.shape
        pad = np.zeros(tuple(2 * n for n in L))
        pad[tuple(slice(0, n) for n in L)] = x.reshape(L)
        block = tuple(slice(0, n) for n in L)
        if self.real_fft:
            y = np.fft.irfftn(np.fft.rfftn(pad) * self.spectrum, s=pad.shape, axes=range(pad.ndim))[block]
            return y.reshape(-1)
        y = np.fft.ifftn(np.fft.fftn(pad) * self.spectrum)[block]
        if check_imag:
            # round-off of the transform pair scales with max|Lambda| |x|, not with |y| (which may cancel)
            im = np.linalg.norm(y.imag)
            scale = max(np.linalg.norm(y.real), self.spectrum_max * np.linalg.norm(x), np.finfo(float).tiny)
            if im > 1e-12 * scale:
                raise FloatingPointError(f"imaginary residue {im:.3e} exceeds round-off for scale {scale:.3e}")
        return np.ascontiguousarray(y.real).reshape(-1)

    __matmul__ = matvec

    def __call__(self, x):
        return self.matvec(x)

    def dense(self, cap=DENSE_CAP):
        return dense_reconstruct(self, cap)


def matvec(op: ToeplitzOperator, x):
    return op.matvec(x)


def dense_reconstruct(op, cap=DENSE_CAP):
    """Full matrix a_ij = t(|i - j|); refuses orders above ``cap``."""
    if not isinstance(op, ToeplitzOperator):
        op = ToeplitzOperator(op)
    n = op.size
    if n > cap:
        raise MemoryError(f"dense reconstruction of order {n} exceeds the cap {cap}")
    idx = np.indices(op.shape).reshape(op.d, -1).T
    diff = np.abs(idx[:, None, :] - idx[None, :, :])
    return op.t[tuple(diff[..., j] for j in range(op.d))]


def dense_circulant(c):
    """Dense circulant C_ij = c((i - j) mod 2L) for a column tensor c (testing helper)."""
    c = np.asarray(c)
    idx = np.indices(c.shape).reshape(c.ndim, -1).T
    diff = np.mod(idx[:, None, :] - idx[None, :, :], np.array(c.shape))
    return c[tuple(diff[..., j] for j in range(c.ndim))]
