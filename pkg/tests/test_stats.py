import math

import numpy as np
import pytest
from scipy import optimize
from scipy.stats import binom

from iqpsecret import stats


def test_rho_bounds():
    # 2^-(w+1) is the first factor's deficit and 2^-w the union bound
    for w in range(31):
        r = stats.rho(w)
        assert 2.0 ** (-w - 1) <= r <= 2.0 ** -w


def test_rho_multiplicative_approx():
    assert abs(stats.rho(7) * 2 ** 7 - 1) < 0.02
    ratios = [stats.rho(w) * 2 ** w for w in range(5, 25)]
    assert all(a < b for a, b in zip(ratios, ratios[1:])) and ratios[-1] == pytest.approx(1, abs=1e-6)


def test_rho_zero():
    # 1 - prod_{i>=1}(1 - 2^-i), the non-singularity constant 0.2887...
    assert 1 - stats.rho(0) == pytest.approx(0.288788095, abs=1e-9)
    with pytest.raises(ValueError):
        stats.rho(-1)


def test_success_theory_limits():
    assert stats.success_theory(60, 300, 360, 4, 102, 60) == pytest.approx(1.0)
    assert stats.success_theory_simple(60, 300, 360, 4) == pytest.approx(1.0)
    assert stats.success_theory(0, 300, 360, 4, 102, 38) == 0.0
    assert stats.success_theory_simple(-2, 300, 360, 4) == 0.0
    assert stats.success_theory(8, 300, 360, 4, 102, 38) < stats.success_theory_simple(8, 300, 360, 4)


def test_w_half():
    w = stats.w_half(300, 360, 4)
    root = optimize.brentq(lambda x: stats.success_theory_simple(x, 300, 360, 4) - 0.5, 1, 20)
    assert w == pytest.approx(root, abs=1e-9)
    assert 6 <= w <= 7


def test_k_infty():
    assert stats.k_infty(96, 0) == (0.0, 0.0, math.inf)
    k1, k, lam = stats.k_infty(96, 57)
    assert k >= k1 > 0 and lam > 0
    ks = [stats.k_infty(96, h)[1] for h in range(0, 90, 5)]
    assert all(a <= b for a, b in zip(ks, ks[1:]))
    seq = stats.k_sequence(96, 57, steps=200)
    assert seq[-1] == pytest.approx(k, abs=1e-9)
    with pytest.raises(ValueError):
        stats.k_infty(10, 11)


def _umpu_brute(N, p0, alpha):
    """Every (C1, C2) whose randomization constants lie in [0, 1]."""
    f = binom.pmf(np.arange(N + 1), N, p0)
    x = np.arange(N + 1)
    valid = []
    for c1 in range(N + 1):
        for c2 in range(c1 + 1, N + 1):
            out = (x < c1) | (x > c2)
            a = alpha - f[out].sum()
            b = alpha * N * p0 - (x * f)[out].sum()
            A = np.array([[f[c1], f[c2]], [c1 * f[c1], c2 * f[c2]]])
            g1, g2 = np.linalg.solve(A, [a, b])
            if -1e-9 <= g1 <= 1 + 1e-9 and -1e-9 <= g2 <= 1 + 1e-9:
                valid.append((c1, c2))
    return valid


@pytest.mark.parametrize("N,p0", [(10, 0.5), (20, 0.3), (40, 0.9), (33, 0.625), (60, 0.1)])
def test_umpu_brute_force(N, p0):
    valid = _umpu_brute(N, p0, 0.05)
    assert stats.umpu_binomial_region(N, p0, 0.05) == valid[0]


def test_umpu_symmetric():
    lo, hi = stats.umpu_binomial_region(10, 0.5, 0.05)
    assert lo + hi == 10 and lo < 5 < hi


def test_umpu_degenerate():
    assert stats.umpu_binomial_region(30, 0.0) == (0, 0)
    assert stats.umpu_binomial_region(30, 1.0) == (30, 30)
    assert stats.umpu_accepts(30, 30, 1.0)
    with pytest.raises(ValueError):
        stats.umpu_binomial_region(10, 0.5, alpha=0)


def test_umpu_size():
    # conservative: keeping the endpoints accepted gives size <= alpha
    for N, p0 in [(100, 0.4), (1000, 0.625), (250, 0.97)]:
        lo, hi = stats.umpu_binomial_region(N, p0)
        size = binom.cdf(lo - 1, N, p0) + binom.sf(hi, N, p0)
        assert size <= 0.05 + 1e-12


def test_endurance_limits():
    assert stats.endurance_estimate(155, 206, 1, 1e9) == pytest.approx(2.0)
    assert stats.endurance_estimate(155, 206, 1, 8) > 2.0


def test_linear_fit():
    assert stats.linear_fit([0, 1, 2], [1, 3, 5]) == pytest.approx((2.0, 1.0))
