"""Conjugate gradients for the Galerkin system, plus a direct 1d Toeplitz solve."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

TRUE_RESIDUAL_EVERY = 25


class BreakdownError(ArithmeticError):
    """Raised when an iteration produces non-finite values or a zero pivot."""


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    converged: bool = False
    wall_time: float = 0.0
    true_residual: float = float("nan")
    true_checks: list = field(default_factory=list)  # (iteration, |b - A x|/|b|) every TRUE_RESIDUAL_EVERY

    @property
    def final_residual(self):
        return self.residual_history[-1] if self.residual_history else float("nan")


def default_max_it(n):
    return int(min(20 * math.sqrt(n), 50000))


def cg_solve(apply, b, tol=1e-12, max_it=None, stop="true") -> CgResult:
    """Un-preconditioned CG from x0 = 0.

    ``residual_history`` holds |r_k|/|b| of the CG recurrence. Every
    TRUE_RESIDUAL_EVERY iterations the residual b - A x_k is recomputed and
    logged in ``true_checks``; ``true_residual`` is the recomputed value at
    exit.

    stop="true": the iteration ends only when a recomputed residual is below
    tol. If the recurrence drops below tol first, CG restarts from the true
    residual. stop="recurrence": the iteration ends when the recurrence
    residual is below tol (the usual textbook test); the recomputed residual
    is still reported. Near the round-off floor eps |A| |x| / |b| only the
    second rule can terminate.
    """
    if stop not in ("true", "recurrence"):
        raise ValueError(f"stop must be 'true' or 'recurrence', got {stop!r}")
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    if not np.all(np.isfinite(b)):
        raise BreakdownError("right-hand side is not finite")
    n = b.size
    if max_it is None:
        max_it = default_max_it(n)
    x = np.zeros(n)
    nb = float(np.linalg.norm(b))
    if nb == 0:
        return CgResult(x, 0, [0.0], True, time.perf_counter() - t0, 0.0)
    r = b.copy()
    p = r.copy()
    rr = float(r @ r)
    hist, checks = [], []

    def true_res():
        return float(np.linalg.norm(b - apply(x))) / nb

    for k in range(1, max_it + 1):
        Ap = apply(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp) or pAp <= 0:
            raise BreakdownError(f"CG breakdown at iteration {k}: p^T A p = {pAp}")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = float(r @ r)
        rel = math.sqrt(rr_new) / nb
        if not np.isfinite(rel):
            raise BreakdownError(f"non-finite residual at iteration {k}")
        hist.append(rel)
        if k % TRUE_RESIDUAL_EVERY == 0:
            checks.append((k, true_res()))
            if stop == "true" and checks[-1][1] < tol:
                return CgResult(x, k, hist, True, time.perf_counter() - t0, checks[-1][1], checks)
        if rel < tol:
            tr = true_res()
            if stop == "recurrence" or tr < tol:
                return CgResult(x, k, hist, True, time.perf_counter() - t0, tr, checks)
            # restart from the recomputed residual
            r = b - apply(x)
            rr_new = float(r @ r)
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    return CgResult(x, max_it, hist, False, time.perf_counter() - t0, true_res(), checks)


def levinson_solve_1d(first_row, b, pivot_tol=1e-14):
    """Direct O(L^2) solve of a symmetric Toeplitz system (Levinson recursion).

    The leading principal minors are checked through the Durbin recursion for
    the reflection coefficients; a near-singular minor raises BreakdownError.
    """
    c = np.asarray(first_row, dtype=float)
    b = np.asarray(b, dtype=float)
    if c.ndim != 1 or b.ndim != 1:
        raise ValueError("the Levinson solve is one-level only (d = 1)")
    if c.size != b.size:
        raise ValueError(f"first row has length {c.size}, right-hand side {b.size}")
    if c[0] == 0:
        raise BreakdownError("zero diagonal; use CG instead")
    _check_minors(c, pivot_tol)
    try:
        x = scipy.linalg.solve_toeplitz(c, b)
    except np.linalg.LinAlgError as e:
        raise BreakdownError(f"Levinson recursion broke down ({e}); use CG instead") from e
    if not np.all(np.isfinite(x)):
        raise BreakdownError("Levinson recursion produced non-finite values; use CG instead")
    return x


def _check_minors(c, pivot_tol):
    # Durbin recursion; beta is the ratio of consecutive leading minors of T / c[0]
    r = c[1:] / c[0]
    n = len(r)
    if n == 0:
        return
    y = np.empty(n)
    y[0] = alpha = -r[0]
    beta = 1.0
    for k in range(1, n + 1):
        beta *= 1.0 - alpha * alpha
        if abs(beta) <= pivot_tol:
            raise BreakdownError(f"near-singular leading minor of order {k + 1}; use CG instead")
        if k == n:
            break
        alpha = -(r[k] + r[k - 1::-1] @ y[:k]) / beta
        y[:k] += alpha * y[k - 1::-1]
        y[k] = alpha
