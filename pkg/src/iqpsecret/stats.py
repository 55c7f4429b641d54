"""Theory curves and the exact binomial test used to compare experiments with them."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


def rho(w: int, tol: float = 1e-18) -> float:
    """Probability that a random k x (k + w) matrix has rank < k, as k -> infinity.

    1 - prod_{i > w} (1 - 2^-i), truncated once 2^-i < tol.  It satisfies
    2^-(w+1) <= rho(w) <= 2^-w and rho(w) 2^w -> 1.
    """
    if w < 0:
        raise ValueError("w must be nonnegative")
    log_prod = 0.0
    i = w + 1
    while True:
        term = 2.0 ** (-i)
        log_prod += math.log1p(-term)
        if term < tol:
            break
        i += 1
    return -math.expm1(log_prod)


def success_theory(w: int, n: int, m: int, g: int, m1: int, d: int) -> float:
    """(1 - rho(w)) (1 - 2^-w)^m1 (1 - 2^-d)^m1."""
    if w <= 0 or d <= 0:
        return 0.0
    return (1.0 - rho(w)) * (1.0 - 2.0 ** -w) ** m1 * (1.0 - 2.0 ** -d) ** m1


def success_theory_simple(w: float, n: int, m: int, g: int) -> float:
    """(1 - 2^-w)^(g + m - n)."""
    if w <= 0:
        return 0.0
    return (1.0 - 2.0 ** -w) ** (g + m - n)


def w_half(n: int, m: int, g: int) -> float:
    """Excess width at which the simplified success curve equals 1/2."""
    return -math.log2(-math.expm1(-math.log(2) / (g + m - n)))


def k_infty(m: int, h: float, offset: float = 2.0, max_iter: int = 10_000,
            tol: float = 1e-12) -> tuple[float, float, float]:
    """(k1, k_inf, lambda) for the minimum-weight bound on random m x (m - h) matrices.

    k_i = k1 + (k_{i-1} - 1) ln k_{i-1} / (ln m + offset), with the correction
    term taken as 0 for k <= 1.  ``offset=2`` is the bound's stated form;
    ``offset=1`` gives the exact zero of the log-bound.
    """
    if not 0 <= h <= m:
        raise ValueError("need 0 <= h <= m")
    denom = math.log(m) + offset
    k1 = h * math.log(2) / denom
    k = k1
    for _ in range(max_iter):
        nxt = k1 + ((k - 1) * math.log(k) / denom if k > 1 else 0.0)
        if abs(nxt - k) < tol:
            k = nxt
            break
        k = nxt
    lam = math.inf if k <= 0 else 1.0 / k + math.log(m / k)
    return k1, k, lam


def k_sequence(m: int, h: float, offset: float = 2.0, steps: int = 50) -> list[float]:
    denom = math.log(m) + offset
    k1 = h * math.log(2) / denom
    seq = [k1]
    for _ in range(steps - 1):
        k = seq[-1]
        seq.append(k1 + ((k - 1) * math.log(k) / denom if k > 1 else 0.0))
    return seq


def umpu_binomial_region(trials: int, p0: float, alpha: float = 0.05) -> tuple[int, int]:
    """Acceptance interval [C1, C2] of the two-sided UMPU test of p = p0.

    The randomized test rejects outside (C1, C2) and with probabilities g1, g2
    at the endpoints, chosen so the size is alpha and the test is unbiased
    (E[X phi] = alpha N p0).  Endpoints are kept in the acceptance region,
    which makes the test conservative.
    """
    N = int(trials)
    if N < 0:
        raise ValueError("trials must be nonnegative")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if p0 <= 0:
        return 0, 0
    if p0 >= 1:
        return N, N
    if N == 0:
        return 0, 0
    x = np.arange(N + 1)
    f = sps.binom.pmf(x, N, p0)
    F = np.concatenate([[0.0], np.cumsum(f)])            # F[c] = P(X < c)
    XF = np.concatenate([[0.0], np.cumsum(x * f)])        # sum_{x<c} x f(x)
    total_x = N * p0
    sd = math.sqrt(N * p0 * (1 - p0))
    span = int(12 * sd) + 3
    mode = int(round(N * p0))
    c1s = np.arange(max(0, mode - span), min(N, mode) + 1)
    c2s = np.arange(max(0, mode), min(N, mode + span) + 1)
    best = None
    for c1 in c1s:
        c2 = c2s[c2s > c1]
        if len(c2) == 0:
            continue
        tail = F[c1] + (1.0 - F[c2 + 1])
        xtail = XF[c1] + (total_x - XF[c2 + 1])
        a = alpha - tail
        b = alpha * total_x - xtail
        f1, f2 = f[c1], f[c2]
        with np.errstate(divide="ignore", invalid="ignore"):
            g2 = (b - c1 * a) / (f2 * (c2 - c1))
            g1 = (a - g2 * f2) / f1
        eps = 1e-9
        ok = (g1 >= -eps) & (g1 <= 1 + eps) & (g2 >= -eps) & (g2 <= 1 + eps)
        if np.any(ok):
            j = np.flatnonzero(ok)[0]
            best = (int(c1), int(c2[j]))
            break
    if best is None:
        # tiny N: the whole range is accepted at this level
        return 0, N
    return best


def umpu_accepts(count: int, trials: int, p0: float, alpha: float = 0.05) -> bool:
    lo, hi = umpu_binomial_region(trials, p0, alpha)
    return lo <= count <= hi


def endurance_estimate(n: int, m: int, g: int, A: float) -> float:
    """Expected Lazy Linearity rounds: 2^g / Pr[dim ker G_d < A] under a Gaussian model."""
    p = sps.norm.cdf(A, loc=n - m / 2, scale=math.sqrt(m) / 2)
    return math.inf if p == 0 else 2.0 ** g / p


def linear_fit(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept."""
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)
