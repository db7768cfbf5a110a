"""Compiled inner loops for power-law kernels C r^(-beta)."""

import numpy as np
from numba import njit


@njit(cache=True)
def tensor_sum1(u0, w0, C, beta, scale):
    half = -0.5 * beta
    s2 = scale * scale
    tot = 0.0
    for a in range(u0.shape[0]):
        tot += w0[a] * (s2 * u0[a] * u0[a]) ** half
    return C * tot


@njit(cache=True)
def tensor_sum2(u0, w0, u1, w1, C, beta, scale):
    half = -0.5 * beta
    s2 = scale * scale
    q1 = s2 * u1 * u1
    tot = 0.0
    for a in range(u0.shape[0]):
        q0 = s2 * u0[a] * u0[a]
        acc = 0.0
        for b in range(q1.shape[0]):
            acc += w1[b] * (q0 + q1[b]) ** half
        tot += w0[a] * acc
    return C * tot


@njit(cache=True)
def tensor_sum3(u0, w0, u1, w1, u2, w2, C, beta, scale):
    half = -0.5 * beta
    s2 = scale * scale
    q1 = s2 * u1 * u1
    q2 = s2 * u2 * u2
    tot = 0.0
    for a in range(u0.shape[0]):
        q0 = s2 * u0[a] * u0[a]
        acc1 = 0.0
        for b in range(q1.shape[0]):
            q01 = q0 + q1[b]
            acc2 = 0.0
            for c in range(q2.shape[0]):
                acc2 += w2[c] * (q01 + q2[c]) ** half
            acc1 += w1[b] * acc2
        tot += w0[a] * acc1
    return C * tot


@njit(cache=True)
def shifted_sums(Z, du, dw, C, beta, scale):
    """out[m] = C sum over atom tuples of prod w * (scale |Z[m] + du|)^(-beta).

    The same 1d atom list (du, dw) is used in every dimension.
    """
    half = -0.5 * beta
    s2 = scale * scale
    m, d = Z.shape
    A = du.shape[0]
    out = np.empty(m)
    q = np.empty((d, A))
    for k in range(m):
        for j in range(d):
            for a in range(A):
                v = Z[k, j] + du[a]
                q[j, a] = s2 * v * v
        tot = 0.0
        if d == 1:
            for a in range(A):
                tot += dw[a] * q[0, a] ** half
        elif d == 2:
            for a in range(A):
                acc = 0.0
                for b in range(A):
                    acc += dw[b] * (q[0, a] + q[1, b]) ** half
                tot += dw[a] * acc
        else:
            for a in range(A):
                acc1 = 0.0
                for b in range(A):
                    q01 = q[0, a] + q[1, b]
                    acc2 = 0.0
                    for c in range(A):
                        acc2 += dw[c] * (q01 + q[2, c]) ** half
                    acc1 += dw[b] * acc2
                tot += dw[a] * acc1
        out[k] = C * tot
    return out
