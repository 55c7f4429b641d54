"""Acceptance criteria, each reported as one PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v -s``; the summary
lines are also repeated at the end of the pytest terminal report.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from acceptance_log import report
from iqpsecret import attacks as atk
from iqpsecret import experiments as exp
from iqpsecret import f2la as F
from iqpsecret import formats as fmt
from iqpsecret import scheme, sim, stats
from iqpsecret.attacks import AttackConfig
from iqpsecret.f2la import BitMatrix, BitVector, Subspace
from iqpsecret.qrc import QrcParams, build_qrc_instance

pytestmark = pytest.mark.slow

N, M, G = 300, 360, 4


@pytest.fixture(scope="module")
def natural_run():
    t0 = time.perf_counter()
    recs = exp.run_sigmoid_experiment(N, M, G, trials=1000, seed=2024)
    return recs, time.perf_counter() - t0


# 1 ---------------------------------------------------------------------------


def test_criterion_1_radical_success(natural_run):
    recs, elapsed = natural_run
    ok = sum(r.correct for r in recs)
    wide_fail = sum(1 for r in recs if r.w > 18 and not r.correct)
    passed = ok >= 990 and wide_fail == 0 and elapsed < 600
    report(1, passed, f"{ok}/1000 recovered, {wide_fail} failures with w > 18, {elapsed:.0f} s")
    assert passed


# 2 ---------------------------------------------------------------------------


def test_criterion_2_sigmoid(natural_run):
    strat = exp.run_sigmoid_experiment(N, M, G, trials=50, seed=7, w_values=range(2, 15, 2))
    bins_s = exp.summarize_by_w(strat)
    bins_n = [b for b in exp.summarize_by_w(natural_run[0]) if b.count >= 20]
    bins = bins_s + bins_n
    frac = sum(b.accepted for b in bins) / len(bins)
    w_t = exp.transition_w(bins_s)
    passed = frac >= 0.9 and w_t is not None and 5 <= w_t <= 8
    report(2, passed, f"{sum(b.accepted for b in bins)}/{len(bins)} bins inside the UMPU region, "
                      f"transition at w = {w_t:.2f} (w_half = {stats.w_half(N, M, G):.2f})")
    assert passed


# 3 ---------------------------------------------------------------------------


def test_criterion_3_qrc_resilience_set():
    results = {}
    for q in (103, 127):
        p = QrcParams(q)
        wins = 0
        for i in range(100):
            inst = build_qrc_instance(p, seed=exp.instance_seed(q, i))
            rep = atk.radical_attack(inst.H, g_max=1)
            wins += rep.found and rep.secret == inst.secret
        results[q] = wins
    passed = all(v == 100 for v in results.values())
    report(3, passed, ", ".join(f"q={q}: {v}/100" for q, v in results.items()))
    assert passed


# 4 ---------------------------------------------------------------------------


def test_criterion_4_coverage_union():
    recs = exp.run_qrc_sweep(103, None, ("radical", "lazy-linearity"), per_point=20, seed=11,
                             cfg=AttackConfig(ambition=8, endurance=1000, g_th=1), union=True)
    table = exp.summarize_sweep(recs)
    covered = sum(r["union_success"] for r in table)
    total = sum(r["instances"] for r in table)
    passed = len(table) >= 8 and covered == total
    report(4, passed, f"{covered}/{total} instances solved over n = {[r['n'] for r in table]}")
    assert passed


# 5 ---------------------------------------------------------------------------


def test_criterion_5_double_meyer():
    grid = [110, 125, 140, 155]
    recs = exp.run_qrc_sweep(103, grid, ("double-meyer",), per_point=20, seed=5,
                             cfg=AttackConfig(k=6, g_th=1, ambition=8, endurance=1000))
    table = exp.summarize_sweep(recs)
    passed = all(r["double-meyer_success"] == r["instances"] == 20 for r in table)
    # the other role reading (8 rounds, threshold 1000) is measured for the record only
    alt = exp.run_qrc_sweep(103, grid, ("double-meyer",), per_point=20, seed=5,
                            cfg=AttackConfig(k=6, g_th=1, ambition=1000, endurance=8))
    alt_ok = sum(r.correct for r in alt)
    report(5, passed, "A=8, E=1000: " + ", ".join(f"n={r['n']}: {r['double-meyer_success']}/20" for r in table)
           + f"; swapped reading A=1000, E=8 (not asserted): {alt_ok}/{len(alt)}")
    assert passed


# 6 ---------------------------------------------------------------------------


def test_criterion_6_kernel_statistics():
    rows = exp.run_kernel_stats(103, probes=20, seed=3, instances=5)
    fits = exp.summarize_kernel_stats(rows)
    last = fits["per_n"][-1]
    assert last["n"] == 155
    ratios = {k: last[f"stacked_k{k}"] / last[f"predicted_k{k}"] for k in (2, 3, 4)}
    passed = (0.9 <= fits["slope_G"] <= 1.1 and abs(fits["slope_diff"]) < 0.1
              and all(0.5 <= r <= 2 for r in ratios.values()))
    report(6, passed, f"slope {fits['slope_G']:.3f}, diff slope {fits['slope_diff']:.3f}, "
                      f"stacked/predicted at n=155: "
                      + ", ".join(f"k={k}: {r:.2f}" for k, r in ratios.items()))
    assert passed


# 7 ---------------------------------------------------------------------------

SMALL_SHAPES = [(8, 14, 1), (10, 18, 2), (12, 20, 2), (12, 22, 3), (11, 20, 2), (12, 24, 4), (9, 16, 1)]


def _slack_candidates(inst, max_extra=2, limit=20):
    """v = s + u with H u of weight <= max_extra, supported off the secret rows."""
    n = inst.n
    A = inst.H.to_array().astype(np.int64)
    U = (np.arange(1, 1 << n)[:, None] >> np.arange(n)) & 1
    HU = (A @ U.T) % 2
    secret = np.zeros(inst.m, dtype=bool)
    secret[inst.secret_rows()] = True
    wt = HU.sum(axis=0)
    keep = (wt >= 1) & (wt <= max_extra) & ~HU[secret].any(axis=0)
    out = []
    for j in np.flatnonzero(keep)[:limit]:
        out.append((inst.secret ^ BitVector.from_array(U[j]), int(wt[j])))
    return out


def test_criterion_7_simulator_oracle():
    worst, alt_worst, alt_count = 0.0, 0.0, 0
    for i in range(100):
        n, m, g = SMALL_SHAPES[i % len(SMALL_SHAPES)]
        inst = scheme.generate_stabilizer(n, m, g, seed=exp.instance_seed(77, i))
        dist = sim.simulate(inst.H)
        worst = max(worst, abs(sim.bias_of(dist, inst.secret) - scheme.bias(g)))
        for v, extra in _slack_candidates(inst):
            try:
                cert = scheme.validate_secret(inst.H, v)
            except scheme.NotASecret:
                continue
            if cert.g_actual != g + extra:
                continue
            alt_count += 1
            alt_worst = max(alt_worst, abs(sim.bias_of(dist, v) - scheme.bias(g + extra)))
    passed = worst < 1e-9 and alt_count > 0 and alt_worst < 1e-9
    report(7, passed, f"planted bias error {worst:.1e} on 100 instances, "
                      f"{alt_count} slack candidates with error {alt_worst:.1e}")
    assert passed


# 8 ---------------------------------------------------------------------------


def _full_rank_count(k, w, draws, rng, chunk=500):
    cols = k + w
    nw = F.nwords(cols)
    mask = F._tail_mask(cols)
    full = 0
    for lo in range(0, draws, chunk):
        b = min(chunk, draws - lo)
        data = rng.integers(0, 2**64, size=(b, k, nw), dtype=np.uint64) & mask
        full += int(np.sum(F.batch_rank(data, cols) == k))
    return full


def test_criterion_8_rho():
    ws = range(31)
    bound_ok = [2.0 ** -w <= stats.rho(w) <= 2.0 ** (-w + 1) for w in ws]
    approx = abs(stats.rho(7) * 2 ** 7 - 1)
    rng = np.random.default_rng(8)
    mc = {}
    for w in (0, 2, 5):
        full = _full_rank_count(200, w, 10_000, rng)
        mc[w] = (full, stats.umpu_accepts(full, 10_000, 1 - stats.rho(w)))
    passed = all(bound_ok) and approx < 0.02 and all(a for _, a in mc.values())
    bad = [w for w, ok in zip(ws, bound_ok) if not ok]
    report(8, passed,
           f"stated bounds 2^-w <= rho <= 2^(1-w) violated at {len(bad)}/31 values of w "
           f"(rho(w) < 2^-w for every w); |rho(7) 2^7 - 1| = {approx:.4f}; "
           "Monte-Carlo full-rank counts "
           + ", ".join(f"w={w}: {c}/10000 {'accepted' if a else 'rejected'}" for w, (c, a) in mc.items()))
    assert passed


# 9 ---------------------------------------------------------------------------


def test_criterion_9_razor():
    wins, overlaps, full_support = 0, 0, 0
    for i in range(100):
        inst = scheme.generate_stabilizer(N, M, G, seed=exp.instance_seed(99, i),
                                          redundancy_mode="challenge-legacy")
        rep = atk.hamming_razor(inst.H, AttackConfig(p=0.25, endurance=50), np.random.default_rng(i),
                                g_max=G)
        wins += rep.found and rep.secret == inst.secret
        if scheme.rad_support_full(inst):
            full_support += 1
            overlaps += bool(np.intersect1d(atk.singletons(inst.H), inst.secret_rows()).size)
    passed = wins >= 95 and overlaps == 0
    report(9, passed, f"{wins}/100 recovered with p = 0.25; singleton sets meet the secret rows "
                      f"in {overlaps}/{full_support} full-support instances")
    assert passed


CHALLENGE_SECRET = "cyCxfXKxLxXu3YWND2fSzf+YKtZJFLWY1J0l2rBao0A5zVWRSKA="


def test_criterion_9_challenge_file():
    path = os.environ.get("IQP_CHALLENGE_FILE")
    if not path or not Path(path).exists():
        report("9 (challenge file)", None, "skipped: set IQP_CHALLENGE_FILE to the upstream challenge matrix")
        pytest.skip("challenge file not supplied (set IQP_CHALLENGE_FILE)")
    H = fmt.read_any_matrix(path, bremner=True)
    s = fmt.decode_secret(CHALLENGE_SECRET, H.cols)
    cert = scheme.validate_secret(H, s)
    n_single = len(atk.singletons(H))
    kdim = F.kernel_basis(F.gram(H)).dim
    passed = (n_single, kdim, cert.g_actual, cert.rad_dim, cert.m1_observed) == (69, 34, 4, 35, 96)
    report("9 (challenge file)", passed, f"{n_single} singletons, dim ker G = {kdim}, "
                                         f"g = {cert.g_actual}, d = {cert.rad_dim}, m1 = {cert.m1_observed}")
    assert passed


# 10 --------------------------------------------------------------------------


def _f2la_oracle_cases(count=500):
    rng = np.random.default_rng(10)
    for _ in range(count):
        r, c, k = (int(x) for x in rng.integers(1, 70, size=3))
        A = rng.integers(0, 2, size=(r, c), dtype=np.uint8)
        B = rng.integers(0, 2, size=(c, min(k, 24)), dtype=np.uint8)
        v = rng.integers(0, 2, size=c, dtype=np.uint8)
        MA = BitMatrix.from_array(A)
        la = A.tolist()
        if F.mat_mul(MA, BitMatrix.from_array(B)).to_array().tolist() != oracles.matmul(la, B.tolist()):
            return False
        if F.transpose(MA).to_array().tolist() != oracles.transpose(la):
            return False
        if (MA @ BitVector.from_array(v)).to_array().tolist() != oracles.matvec(la, v.tolist()):
            return False
        rk = oracles.rank(la)
        K = F.kernel_basis(MA)
        if F.rank(MA) != rk or K.dim != c - rk or (K.dim and not F.mat_mul(MA, K.basis).is_zero()):
            return False
        if c <= 20 and F.gram(MA).to_array().tolist() != oracles.gram(la, c):
            return False
        b = MA @ BitVector.from_array(v)
        if (MA @ F.solve(MA, b)) != b:
            return False
    return True


def _subspace_exhaustive():
    rng = np.random.default_rng(12)
    members = lambda U: {tuple(x.to_array().tolist()) for x in U.elements()}
    for n in range(1, 13):
        for _ in range(6):
            ra = rng.integers(0, 2, size=(int(rng.integers(1, n + 1)), n), dtype=np.uint8)
            rb = rng.integers(0, 2, size=(int(rng.integers(1, n + 1)), n), dtype=np.uint8)
            U, V = (Subspace.from_rows(BitMatrix.from_array(x)) for x in (ra, rb))
            SU, SV = oracles.span(ra.tolist(), n), oracles.span(rb.tolist(), n)
            if members(U) != SU or members(F.subspace_intersection(U, V)) != SU & SV:
                return False
            if members(F.subspace_sum(U, V)) != oracles.span(ra.tolist() + rb.tolist(), n):
                return False
            if members(F.kernel_basis(BitMatrix.from_array(ra))) != oracles.kernel_set(ra.tolist(), n):
                return False
            if F.is_doubly_even_space(U) != all(sum(x) % 4 == 0 for x in SU):
                return False
    return True


def _linearity_lemma(inst):
    """For every d: H_s d in rad C_s implies s in ker gram(H_d).  Returns (#d meeting the premise)."""
    n = inst.n
    sel = inst.secret_rows()
    Hsel = inst.H.take_rows(sel)
    _, gens = scheme.radical_generators(inst.H, inst.secret)
    rad = Subspace.span(gens)
    premise = 0
    for v in range(1 << n):
        d = BitVector.from_int(v, n)
        if not F.contains(rad, Hsel @ d):
            continue
        premise += 1
        Gd = F.gram(scheme.scale_rows(inst.H, d))
        if (Gd @ inst.secret):
            raise AssertionError(f"implication fails for d = {d}")
    return premise


def test_criterion_10_oracle_equivalence():
    f2la_ok = _f2la_oracle_cases()
    sub_ok = _subspace_exhaustive()
    premises = []
    for n, m, g in [(12, 20, 2), (13, 22, 2), (14, 24, 2), (14, 26, 3)]:
        inst = scheme.generate_stabilizer(n, m, g, seed=n + m)
        premises.append(_linearity_lemma(inst))
    passed = f2la_ok and sub_ok and all(p > 1 for p in premises)
    report(10, passed, f"500 naive-oracle cases {'agree' if f2la_ok else 'DISAGREE'}; "
                       f"subspace ops {'match' if sub_ok else 'DO NOT match'} enumeration for dim <= 12; "
                       f"lemma holds for all d on 4 instances (premise met by {premises} probes)")
    assert passed
