"""Secret-extraction attacks on obfuscated IQP tableaux."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .f2la import (
    BitMatrix,
    BitVector,
    EchelonBasis,
    NoSolution,
    Subspace,
    gram,
    kernel_basis,
    mat_mul,
    solve,
    support_of_columns,
    transpose,
)
from .scheme import InstanceParams, NotASecret, SecretCertificate, make_rng, validate_secret
from . import stats

FOUND = "found"
FAILED = "failed"

# Extra random columns in the rank sketch used to pre-filter candidates; a
# candidate with rank(G_x) > g_th slips through with probability <= 2**-SKETCH_SLACK.
SKETCH_SLACK = 24


class EmptyInterval(ValueError):
    pass


@dataclass(frozen=True)
class AttackConfig:
    ambition: int = 8
    endurance: int = 1000
    g_th: int = 1
    k: int = 6
    p: float = 0.25
    seed: int | None = None

    def __post_init__(self):
        if self.ambition < 0:
            raise ValueError("ambition must be >= 0")
        if self.endurance < 1:
            raise ValueError("endurance must be >= 1")
        if self.g_th < 1 or self.k < 1:
            raise ValueError("g_th and k must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")

    def replace(self, **kw) -> "AttackConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return AttackConfig(**d)


@dataclass
class AttackReport:
    attack: str
    outcome: str
    secret: BitVector | None = None
    certificate: SecretCertificate | None = None
    iterations_used: int = 0
    kernel_dims: list[int] = field(default_factory=list)
    candidates_tested: int = 0
    wall_time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.outcome == FOUND

    def to_dict(self) -> dict:
        return dict(
            attack=self.attack,
            outcome=self.outcome,
            secret="".join(map(str, self.secret.to_array())) if self.secret is not None else None,
            certificate=None if self.certificate is None else dict(self.certificate.__dict__),
            iterations_used=self.iterations_used,
            kernel_dims=list(self.kernel_dims),
            candidates_tested=self.candidates_tested,
            wall_time=self.wall_time,
            info=self.info,
        )


def _report(name, t0, secret=None, cert=None, **kw) -> AttackReport:
    return AttackReport(attack=name, outcome=FOUND if cert is not None else FAILED,
                        secret=secret if cert is not None else None, certificate=cert,
                        wall_time=time.perf_counter() - t0, **kw)


def _try_secret(H: BitMatrix, s: BitVector, g_max: int | None):
    try:
        return validate_secret(H, s, g_max)
    except NotASecret:
        return None


def _indicator(m: int, rows) -> BitVector:
    return BitVector.from_indices(m, rows)


# Radical Attack --------------------------------------------------------------


def radical_image(H: BitMatrix) -> BitMatrix:
    """Generators H K of H(ker H^T H), one per column."""
    K = kernel_basis(gram(H))
    return mat_mul(H, K.basis)


def _solve_support(H: BitMatrix, rows, g_max, name, t0, **kw) -> AttackReport:
    try:
        s = solve(H, _indicator(H.rows, rows))
    except NoSolution:
        return _report(name, t0, info=dict(kw.pop("info", {}), reason="unsolvable"), **kw)
    cert = _try_secret(H, s, g_max)
    info = dict(kw.pop("info", {}))
    if cert is None:
        info["reason"] = "invalid candidate"
    return _report(name, t0, s, cert, info=info, **kw)


def radical_attack(H: BitMatrix, g_max: int | None = None) -> AttackReport:
    """Solve H s = 1_S with S the joint support of H(ker H^T H)."""
    t0 = time.perf_counter()
    HK = radical_image(H)
    S = support_of_columns(HK)
    return _solve_support(H, S, g_max, "radical", t0, kernel_dims=[HK.cols],
                          iterations_used=1, candidates_tested=1,
                          info=dict(support=int(len(S))))


def doubly_even_part(V: BitMatrix) -> BitMatrix:
    """Columns spanning the doubly-even vectors of the span of V.

    V must span an isotropic space.  There, |v|/2 mod 2 is linear, so the
    doubly-even vectors form a subspace of codimension at most one.
    """
    U = Subspace.span(V).basis_rows()
    if U.rows == 0:
        return BitMatrix.zeros(V.rows, 0)
    half = (np.bitwise_count(U.data).sum(axis=1) // 2) % 2
    odd = np.flatnonzero(half)
    if len(odd) == 0:
        return transpose(U)
    pivot = odd[0]
    data = U.data.copy()
    data[odd[1:]] ^= data[pivot]
    keep = np.delete(np.arange(U.rows), pivot)
    return transpose(BitMatrix(len(keep), U.cols, data[keep]))


def radical_attack_doubly_even(H: BitMatrix, g_max: int | None = None) -> AttackReport:
    """Radical Attack restricted to the doubly-even part of H(ker H^T H)."""
    t0 = time.perf_counter()
    HK = radical_image(H)
    DE = doubly_even_part(HK)
    S = support_of_columns(DE)
    return _solve_support(H, S, g_max, "radical-de", t0, kernel_dims=[HK.cols],
                          iterations_used=1, candidates_tested=1,
                          info=dict(support=int(len(S)), dropped=HK.cols - DE.cols))


# probes and candidates ---------------------------------------------------------


class _Dense:
    """Float copies of H for fast mod-2 products via BLAS."""

    def __init__(self, H: BitMatrix):
        self.H = H
        self.a = H.to_array().astype(np.float32)
        self.m, self.n = self.a.shape

    def probe_gram(self, d: np.ndarray) -> np.ndarray:
        """gram(H_d) for a 0/1 probe vector d, as a 0/1 uint8 array."""
        sel = (self.a @ d.astype(np.float32)) % 2 == 1
        Hd = self.a[sel]
        return ((Hd.T @ Hd) % 2).astype(np.uint8)

    def kernel_dim_H_d(self, d: np.ndarray) -> int:
        sel = (self.a @ d.astype(np.float32)) % 2 == 1
        rows = self.a[sel].astype(np.uint8)
        if rows.shape[0] == 0:
            return self.n
        return kernel_basis(BitMatrix.from_array(rows)).dim


def gray_coefficients(dim: int) -> np.ndarray:
    """(2**dim - 1) x dim 0/1 array of nonzero coefficient vectors in Gray-code order."""
    j = np.arange(1, 1 << dim, dtype=np.int64)
    gray = j ^ (j >> 1)
    return ((gray[:, None] >> np.arange(dim)) & 1).astype(np.uint8)


def kernel_candidates(K: BitMatrix) -> np.ndarray:
    """Nonzero members of the column span of K, Gray-code order, as rows."""
    C = gray_coefficients(K.cols).astype(np.float32)
    return ((C @ K.to_array().T.astype(np.float32)) % 2).astype(np.uint8)


def _rank_gt(vectors: np.ndarray, bound: int) -> bool:
    packed = np.packbits(vectors, axis=1)
    basis = EchelonBasis()
    for row in packed:
        if basis.add(int.from_bytes(row.tobytes(), "big")) and len(basis) > bound:
            return True
    return False


def _search_candidates(dense: _Dense, X: np.ndarray, g_th: int, rng) -> tuple[BitVector | None, SecretCertificate | None, int]:
    """First row of X that is a secret with codimension <= g_th.

    rank(H_x^T H_x R) <= rank(H_x^T H_x) for any R, so the random sketch only
    discards candidates that are certainly not secrets (up to the sketch's
    failure probability on true non-secrets, which merely costs a full check).
    """
    a = dense.a
    t = g_th + SKETCH_SLACK
    R = rng.integers(0, 2, size=(dense.n, t)).astype(np.float32)
    HR = (a @ R) % 2
    HX = (a @ X.T.astype(np.float32)) % 2                     # m x N
    tested = 0
    block = max(1, 4096 // t)
    for lo in range(0, X.shape[0], block):
        hx = HX[:, lo:lo + block]
        N = hx.shape[1]
        M = (hx[:, :, None] * HR[:, None, :]).reshape(dense.m, N * t)
        Y = ((a.T @ M) % 2).astype(np.uint8).reshape(dense.n, N, t)
        for j in range(N):
            tested += 1
            if not hx[:, j].any() or _rank_gt(Y[:, j, :].T, g_th):
                continue
            x = BitVector.from_array(X[lo + j])
            cert = _try_secret(dense.H, x, g_th)
            if cert is not None:
                return x, cert, tested
    return None, None, tested


def _kernel_from_rows(rows: np.ndarray, n: int, restrict: BitMatrix | None = None) -> BitMatrix:
    """Column basis of {v : rows v = 0}, optionally within the column span of ``restrict``."""
    if restrict is None:
        return kernel_basis(BitMatrix.from_array(rows)).basis
    if restrict.cols == 0:
        return restrict
    sub = ((rows.astype(np.float32) @ restrict.to_array().astype(np.float32)) % 2).astype(np.uint8)
    coeff = kernel_basis(BitMatrix.from_array(sub)).basis
    return mat_mul(restrict, coeff)


# Lazy Linearity and Double Meyer --------------------------------------------


def lazy_linearity_attack(H: BitMatrix, cfg: AttackConfig = AttackConfig(), rng=None) -> AttackReport:
    """Random probes d; enumerate ker gram(H_d) whenever its dimension is below the ambition."""
    return _probe_attack(H, cfg, rng, k=1, seeds=None, name="lazy-linearity")


def radical_seeds(H: BitMatrix) -> list[BitVector]:
    """Probe vectors d with H d in the radical of range(H): a basis of ker H^T H."""
    return kernel_basis(gram(H)).vectors()


def double_meyer(H: BitMatrix, cfg: AttackConfig = AttackConfig(), rng=None,
                 seeds: Sequence[BitVector] | None = None) -> AttackReport:
    """Stack k probe Gram matrices per round and enumerate the joint kernel.

    ``seeds`` are extra probes added to every round without counting toward k.
    """
    name = "double-meyer" if not seeds else "double-meyer-seeded"
    return _probe_attack(H, cfg, rng, k=cfg.k, seeds=seeds, name=name)


def stacked_probe_kernel(dense: _Dense, probes: np.ndarray, restrict: BitMatrix | None = None) -> BitMatrix:
    """Basis of the common kernel of gram(H_d) over the probe rows d."""
    rows = np.vstack([dense.probe_gram(d) for d in probes])
    return _kernel_from_rows(rows, dense.n, restrict)


def _probe_attack(H, cfg, rng, *, k, seeds, name) -> AttackReport:
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed if rng is None else rng)
    dense = _Dense(H)
    n = H.cols
    base = None
    if seeds:
        base = stacked_probe_kernel(dense, np.stack([s.to_array() for s in seeds]))
    dims: list[int] = []
    tested = 0
    for it in range(1, cfg.endurance + 1):
        probes = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
        K = stacked_probe_kernel(dense, probes, base)
        dims.append(K.cols)
        if K.cols == 0 or K.cols >= cfg.ambition:
            continue
        x, cert, used = _search_candidates(dense, kernel_candidates(K), cfg.g_th, rng)
        tested += used
        if cert is not None:
            return _report(name, t0, x, cert, iterations_used=it, kernel_dims=dims,
                           candidates_tested=tested)
    return _report(name, t0, iterations_used=cfg.endurance, kernel_dims=dims,
                   candidates_tested=tested, info=dict(reason="endurance exhausted"))


def escalate(attack: Callable[..., AttackReport], H: BitMatrix, cfg: AttackConfig,
             g_max: int, **kw) -> AttackReport:
    """Run ``attack`` with g_th = 1, 2, ..., g_max, halting at the first success."""
    rep = None
    for g_th in range(1, g_max + 1):
        rep = attack(H, cfg.replace(g_th=g_th), **kw)
        rep.info["g_th"] = g_th
        if rep.found:
            return rep
    return rep


# Razors ----------------------------------------------------------------------


def singletons(H: BitMatrix) -> np.ndarray:
    """Indices i with e^i in range(H), i.e. outside the support of ker H^T."""
    K = kernel_basis(transpose(H))
    inside = np.zeros(H.rows, dtype=bool)
    inside[support_of_columns(K.basis)] = True
    return np.flatnonzero(~inside)


def singleton_razor(H: BitMatrix) -> tuple[BitMatrix, np.ndarray]:
    idx = singletons(H)
    keep = np.setdiff1d(np.arange(H.rows), idx)
    return H.take_rows(keep), idx


def hamming_razor(H: BitMatrix, cfg: AttackConfig = AttackConfig(endurance=50), rng=None,
                  g_max: int | None = None, early_exit: bool = True) -> AttackReport:
    """Accumulate supports of H(ker H_{\\S}) over random deleted row sets S.

    Each row is deleted with probability p.  The rows collected are taken to
    be redundant; the candidate secret solves H s = 1 off the collected rows.
    """
    t0 = time.perf_counter()
    rng = make_rng(cfg.seed if rng is None else rng)
    m = H.rows
    redundant = np.zeros(m, dtype=bool)
    dims: list[int] = []
    tested = 0
    single = np.zeros(m, dtype=bool)
    single[singletons(H)] = True
    last = None
    for it in range(1, cfg.endurance + 1):
        drop = rng.random(m) < cfg.p
        K = kernel_basis(H.take_rows(np.flatnonzero(~drop)))
        dims.append(K.dim)
        if K.dim == 0:
            continue
        support = support_of_columns(mat_mul(H, K.basis))
        if not np.any(~redundant[support]):
            continue
        redundant[support] = True
        # early exit only once every singleton (a certified redundant row) is covered
        if early_exit and not np.any(single & ~redundant):
            rows = np.flatnonzero(~redundant)
            try:
                s = solve(H, _indicator(m, rows))
            except NoSolution:
                continue
            tested += 1
            cert = _try_secret(H, s, g_max)
            if cert is not None:
                return _report("hamming-razor", t0, s, cert, iterations_used=it, kernel_dims=dims,
                               candidates_tested=tested, info=dict(redundant=int(redundant.sum())))
    rep = _solve_support(H, np.flatnonzero(~redundant), g_max, "hamming-razor", t0,
                         iterations_used=cfg.endurance, kernel_dims=dims,
                         candidates_tested=tested + 1,
                         info=dict(redundant=int(redundant.sum())))
    return rep


def suggest_p(params: InstanceParams, offset: float = 1.0) -> tuple[float, float]:
    """Deletion probabilities p with p m2 > m2 - (n - g - d) and p m1 < k_inf."""
    n, g, d, m1, m2 = params.n, params.g, params.d, params.m1, params.m2
    lo = max(0.0, 1.0 - (n - g - d) / m2) if m2 else 0.0
    if lo >= 1.0:
        raise EmptyInterval(f"no admissible p: need p > {lo:.4f}")
    _, k_inf, _ = stats.k_infty(m1, m1 - g - d, offset=offset)
    hi = k_inf / m1
    if not lo < hi or lo >= 1.0:
        raise EmptyInterval(f"no admissible p: need p > {lo:.4f} and p < {hi:.4f}")
    return lo, hi


ATTACKS = {
    "radical": radical_attack,
    "radical-de": radical_attack_doubly_even,
    "lazy-linearity": lazy_linearity_attack,
    "double-meyer": double_meyer,
    "hamming-razor": hamming_razor,
}
