"""IQP Stabilizer Scheme instances: block construction, obfuscation, secret checks."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .f2la import (
    BitMatrix,
    BitVector,
    EchelonBasis,
    Subspace,
    gram,
    is_doubly_even_space,
    kernel_basis,
    mat_mul,
    random_invertible,
    rank,
    solve,
    transpose,
)


class ParameterExhaustion(RuntimeError):
    """No admissible (m1, d) was drawn within the retry budget."""


class SamplingExhaustion(RuntimeError):
    """A block sampler ran out of retries."""


class NotASecret(ValueError):
    pass


class Family(str, enum.Enum):
    STABILIZER = "stabilizer"
    QRC = "qrc"
    EXTENDED_QRC = "extended-qrc"


class RedundancyMode(str, enum.Enum):
    RANDOMIZED = "randomized"
    PUBLISHED = "published"
    CHALLENGE_LEGACY = "challenge-legacy"


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class InstanceParams:
    n: int
    m: int
    g: int
    m1: int
    d: int

    def __post_init__(self):
        if self.m1 > self.m or self.m1 < 1:
            raise ValueError(f"m1={self.m1} out of range for m={self.m}")
        if self.g < 1 or self.d < 0 or self.g + self.d > self.n:
            raise ValueError(f"inadmissible g={self.g}, d={self.d} for n={self.n}")

    @property
    def m2(self) -> int:
        return self.m - self.m1

    @property
    def w(self) -> int:
        return self.n - self.g - self.m2

    @property
    def imbalance(self) -> float:
        return (self.m2 - self.m1) / 2

    def as_dict(self) -> dict:
        return dict(n=self.n, m=self.m, g=self.g, m1=self.m1, m2=self.m2, d=self.d,
                    w=self.w, imbalance=self.imbalance)


@dataclass(frozen=True)
class SecretCertificate:
    g_actual: int
    rad_dim: int
    rad_doubly_even: bool
    m1_observed: int


@dataclass(frozen=True)
class Construction:
    """Pre-obfuscation data; kept for test oracles, never exported with a challenge."""

    H0: BitMatrix
    secret0: BitVector
    perm: np.ndarray
    Q: BitMatrix
    redundancy_mode: str
    blocks: dict = field(default_factory=dict)


@dataclass(frozen=True)
class IqpInstance:
    H: BitMatrix
    secret: BitVector | None
    params: InstanceParams
    family: Family
    seed: int | None = None
    construction: Construction | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.H.cols

    @property
    def m(self) -> int:
        return self.H.rows

    def secret_rows(self) -> np.ndarray:
        """Rows of H not orthogonal to the planted secret."""
        if self.secret is None:
            raise ValueError("instance carries no secret")
        return (self.H @ self.secret).indices()


# parameters ----------------------------------------------------------------


def sample_parameters(n: int, m: int, g: int, rng, *, max_tries: int = 100_000,
                      min_m1: int | None = None, min_d: int = 1) -> tuple[int, int]:
    """Draw (m1, d) for the stabilizer construction.

    ``m1 = g + 2 Bin(m // 2, 0.3)`` and ``d ~ Bin((m1 - g) // 2, 0.75)``, both
    redrawn until ``max(w, min_d) <= d <= (m1 - g) // 2`` where
    ``w = n - g - (m - m1)``.
    """
    if not (n > g >= 1 and m > n):
        raise ValueError(f"need m > n > g >= 1, got n={n}, m={m}, g={g}")
    rng = make_rng(rng)
    if min_m1 is None:
        min_m1 = max(g + 2, 8)
    for _ in range(max_tries):
        m1 = g + 2 * int(rng.binomial(m // 2, 0.3))
        if m1 < min_m1 or m1 >= m:
            continue
        d_max = (m1 - g) // 2
        d = int(rng.binomial(d_max, 0.75))
        w = n - g - (m - m1)
        if max(w, min_d) <= d <= d_max and g + d <= n:
            return m1, d
    raise ParameterExhaustion(f"no admissible (m1, d) for n={n}, m={m}, g={g} "
                              f"after {max_tries} tries")


def sample_d_given_w(n: int, m: int, g: int, w: int, rng, max_tries: int = 100_000,
                     min_d: int = 1) -> tuple[int, int]:
    """(m1, d) for a prescribed excess width w, with d drawn as in sample_parameters."""
    rng = make_rng(rng)
    m1 = w + g + m - n
    if not g + 2 <= m1 < m:
        raise ParameterExhaustion(f"w={w} gives inadmissible m1={m1}")
    d_max = (m1 - g) // 2
    for _ in range(max_tries):
        d = int(rng.binomial(d_max, 0.75))
        if max(w, min_d) <= d <= d_max and g + d <= n:
            return m1, d
    raise ParameterExhaustion(f"no admissible d for w={w}")


# blocks ---------------------------------------------------------------------


def _random_int(rng: np.random.Generator, nbits: int) -> int:
    if nbits == 0:
        return 0
    raw = int.from_bytes(rng.bytes((nbits + 7) // 8), "little")
    return raw & ((1 << nbits) - 1)


def _orthogonal_complement(rows: list[int], length: int) -> list[int]:
    """Basis (as ints) of the vectors orthogonal to every element of ``rows``."""
    basis = [1 << i for i in range(length)]
    for c in rows:
        basis = _restrict(basis, c)
    return basis


def _restrict(basis: list[int], c: int) -> list[int]:
    """Basis of {u in span(basis) : <u, c> = 0}."""
    odd = [u for u in basis if (u & c).bit_count() & 1]
    if not odd:
        return basis
    pivot = odd[0]
    return [u ^ pivot if (u & c).bit_count() & 1 else u for u in basis if u is not pivot]


def _random_element(basis: list[int], rng: np.random.Generator) -> int:
    coeffs = rng.integers(0, 2, size=len(basis), dtype=np.uint8)
    acc = 0
    for row, c in zip(basis, coeffs):
        if c:
            acc ^= row
    return acc


def sample_D(m1: int, d: int, rng, max_draws: int | None = None,
             exclude_ones: bool = True) -> BitMatrix:
    """m1 x d matrix whose columns span a doubly-even isotropic subspace.

    Columns are drawn one at a time from the vectors orthogonal to the all-ones
    vector and to the columns accepted so far; a draw is kept when its weight is
    0 mod 4 and it is independent of the current columns and, with
    ``exclude_ones`` (needed when F carries the all-ones column), of the
    all-ones vector.
    """
    if d < 0 or 2 * d > m1:
        raise ValueError(f"d={d} exceeds the isotropic bound for m1={m1}")
    rng = make_rng(rng)
    if max_draws is None:
        max_draws = 100 * max(d, 1) * m1
    ones = (1 << m1) - 1
    cols: list[int] = []
    span = EchelonBasis([ones] if exclude_ones else [])
    complement = _orthogonal_complement([ones], m1)
    draws = 0
    while len(cols) < d:
        if draws >= max_draws:
            raise SamplingExhaustion(f"sample_D stalled at rank {len(cols)} of {d}")
        draws += 1
        v = _random_element(complement, rng)
        if v.bit_count() % 4 or not span.add(v):
            continue
        cols.append(v)
        complement = _restrict(complement, v)
    return BitMatrix.from_int_rows(cols, m1).T if cols else BitMatrix.zeros(m1, 0)


def sample_F(m1: int, g: int, D: BitMatrix, rng, max_tries: int = 1000,
             positive_bias: bool = True) -> BitMatrix:
    """m1 x g matrix with non-degenerate Gram matrix, orthogonal to range(D).

    The first column is the all-ones vector.  With ``positive_bias`` the draw is
    repeated until the secret's correlation is +2^(-g/2) rather than -2^(-g/2).
    """
    rng = make_rng(rng)
    ones = (1 << m1) - 1
    complement = _orthogonal_complement(D.T.row_ints() if D.cols else [], m1)
    for _ in range(max_tries):
        cols = [ones] + [_random_element(complement, rng) for _ in range(g - 1)]
        F = BitMatrix.from_int_rows(cols, m1).T
        if rank(gram(F)) != g:
            continue
        if not positive_bias or gauss_correlation(F, m1) > 0:
            return F
    raise SamplingExhaustion(f"no non-degenerate F found for m1={m1}, g={g}")


def redundant_rows(top: BitMatrix, m2: int, rng, mode=RedundancyMode.RANDOMIZED) -> BitMatrix:
    """m2 rows orthogonal to e^1 that complete ``top`` to full column rank.

    ``randomized`` draws uniformly random rank-increasing rows, ``published``
    scans the unit vectors e^2, e^3, ... in order; both then add uniformly
    random rows orthogonal to e^1.  ``challenge-legacy`` scans unit vectors and
    fills the remaining rows with combinations of the rows already chosen.
    """
    mode = RedundancyMode(mode)
    rng = make_rng(rng)
    n = top.cols
    basis = EchelonBasis(top.row_ints())
    needed = n - len(basis)
    if needed > m2:
        raise SamplingExhaustion(f"{m2} redundant rows cannot complete rank {len(basis)} to {n}")
    not_e1 = ((1 << n) - 1) ^ 1
    independent: list[int] = []
    if mode is RedundancyMode.RANDOMIZED:
        budget = 64 * n + 1000
        while len(independent) < needed:
            if budget == 0:
                raise SamplingExhaustion("could not complete the rank with random rows")
            budget -= 1
            v = _random_int(rng, n) & not_e1
            if basis.add(v):
                independent.append(v)
    else:
        for j in range(1, n):
            if len(independent) == needed:
                break
            if basis.add(1 << j):
                independent.append(1 << j)
        if len(independent) < needed:
            raise SamplingExhaustion("unit vectors do not complete the rank")
    extra: list[int] = []
    for _ in range(m2 - needed):
        if mode is RedundancyMode.CHALLENGE_LEGACY and independent:
            v = 0
            while not v:
                picks = rng.integers(0, 2, size=len(independent)).astype(bool)
                v = 0
                for row, c in zip(independent, picks):
                    if c:
                        v ^= row
        else:
            v = _random_int(rng, n) & not_e1
        extra.append(v)
    return BitMatrix.from_int_rows(independent + extra, n)


def obfuscate(H: BitMatrix, s: BitVector, rng, *, perm=None, Q: BitMatrix | None = None):
    """Return (P H Q, Q^-1 s, perm, Q) for a random row permutation and invertible Q."""
    rng = make_rng(rng)
    if perm is None:
        perm = rng.permutation(H.rows)
    if Q is None:
        Q = random_invertible(H.cols, rng)
    H2 = mat_mul(H.take_rows(perm), Q)
    s2 = solve(Q, s)
    return H2, s2, np.asarray(perm), Q


def assemble_instance(n: int, m: int, g: int, rng=None, redundancy_mode=RedundancyMode.RANDOMIZED,
                      *, m1: int | None = None, d: int | None = None, seed=None,
                      min_m1: int | None = None, min_d: int = 1) -> IqpInstance:
    """Generate an obfuscated stabilizer-scheme instance with a planted secret."""
    if rng is None:
        rng = make_rng(seed)
    rng = make_rng(rng)
    fixed = m1 is not None and d is not None
    for attempt in range(1 if fixed else 20):
        if not fixed:
            m1, d = sample_parameters(n, m, g, rng, min_m1=min_m1, min_d=min_d)
        try:
            D = sample_D(m1, d, rng)
            F = sample_F(m1, g, D, rng)
            break
        except SamplingExhaustion:
            # small (m1, d) draws can be infeasible; redraw them
            if fixed or attempt == 19:
                raise
    params = InstanceParams(n=n, m=m, g=g, m1=m1, d=d)
    top = np.zeros((m1, n), dtype=np.uint8)
    top[:, :g] = F.to_array()
    top[:, g:g + d] = D.to_array()
    top = BitMatrix.from_array(top)
    R = redundant_rows(top, params.m2, rng, redundancy_mode)
    H0 = top.vstack(R)
    s0 = BitVector.unit(n, 0)
    H, s, perm, Q = obfuscate(H0, s0, rng)
    construction = Construction(H0=H0, secret0=s0, perm=perm, Q=Q,
                                redundancy_mode=RedundancyMode(redundancy_mode).value,
                                blocks=dict(F=F, D=D, R=R))
    return IqpInstance(H=H, secret=s, params=params, family=Family.STABILIZER,
                       seed=seed if isinstance(seed, int) else None, construction=construction)


def generate_stabilizer(n: int, m: int, g: int, seed: int,
                        redundancy_mode=RedundancyMode.RANDOMIZED, **kw) -> IqpInstance:
    return assemble_instance(n, m, g, make_rng(seed), redundancy_mode, seed=seed, **kw)


# secrets --------------------------------------------------------------------


def scale_rows(H: BitMatrix, s: BitVector) -> BitMatrix:
    """H_s: row i kept when <H_i, s> = 1, zeroed otherwise."""
    keep = (H @ s).to_array().astype(bool)
    data = np.where(keep[:, None], H.data, np.uint64(0))
    return BitMatrix(H.rows, H.cols, data)


def _selected_rows(H: BitMatrix, s: BitVector) -> BitMatrix:
    return H.take_rows((H @ s).indices())


def radical_generators(H: BitMatrix, s: BitVector) -> tuple[int, BitMatrix]:
    """(g, generators of rad C_s) in the coordinates of the rows selected by s."""
    Hs = _selected_rows(H, s)
    K = kernel_basis(gram(Hs))
    return H.cols - K.dim, mat_mul(Hs, K.basis)


def secret_certificate(H: BitMatrix, s: BitVector) -> SecretCertificate:
    """Certificate fields for s, computed whether or not s is a secret."""
    if s.len != H.cols:
        raise ValueError("secret length does not match H")
    m1 = (H @ s).weight()
    g, gens = radical_generators(H, s)
    rad = Subspace.span(gens)
    return SecretCertificate(g_actual=g, rad_dim=rad.dim,
                             rad_doubly_even=is_doubly_even_space(rad), m1_observed=m1)


def validate_secret(H: BitMatrix, s: BitVector, g_max: int | None = None) -> SecretCertificate:
    """Certificate for s, or NotASecret if the codimension exceeds g_max or the
    radical is trivial or not doubly even."""
    if not s:
        raise NotASecret("zero vector")
    if g_max is None:
        g_max = H.cols
    cert = secret_certificate(H, s)
    if cert.m1_observed == 0:
        raise NotASecret("H s = 0, the code space is trivial")
    if cert.g_actual > g_max:
        raise NotASecret(f"codimension {cert.g_actual} exceeds {g_max}")
    if cert.rad_dim == 0:
        raise NotASecret("trivial radical")
    if not cert.rad_doubly_even:
        raise NotASecret("radical is not doubly even")
    return cert


def gauss_correlation(F: BitMatrix, m1: int) -> float:
    """E[(-1)^<x,s>] from a complement F of the radical inside the code space.

    Equals Re(omega^m1 2^-g sum_a (-i)^|F a|) with omega = exp(i pi/4); the
    doubly-even radical does not change |c| mod 4 and so drops out.
    """
    g = F.cols
    if g > 24:
        raise ValueError("codimension too large to enumerate")
    coeffs = ((np.arange(1 << g)[:, None] >> np.arange(g)) & 1).astype(np.float64)
    w = ((coeffs @ F.to_array().T.astype(np.float64)) % 2).sum(axis=1).astype(np.int64)
    phases = np.array([1, -1j, -1, 1j])[w % 4]
    z = np.exp(1j * np.pi * m1 / 4) * phases.sum() / (1 << g)
    return float(z.real)


def secret_correlation(H: BitMatrix, s: BitVector) -> float:
    """Classical prediction of E[(-1)^<x,s>] for samples of H; s must be a secret."""
    Hs = _selected_rows(H, s)
    _, rad = radical_generators(H, s)
    basis = EchelonBasis(transpose(rad).row_ints() if rad.cols else [])
    code = Subspace.span(Hs).basis_rows().row_ints()
    comp = [v for v in code if basis.add(v)]
    F = BitMatrix.from_int_rows(comp, Hs.rows).T if comp else BitMatrix.zeros(Hs.rows, 0)
    return gauss_correlation(F, Hs.rows)


def bias(g: float) -> float:
    """Pr[<x, s> = 0] for samples of an instance whose secret has codimension g."""
    if g < 0:
        raise ValueError("g must be nonnegative")
    return 0.5 * (2.0 ** (-g / 2) + 1.0)


def rad_support_full(inst: IqpInstance) -> bool:
    """Whether range(D) covers every secret row (pre-obfuscation check)."""
    c = inst.construction
    if c is None or "D" not in c.blocks:
        raise ValueError("instance has no construction metadata")
    D = c.blocks["D"]
    return D.cols > 0 and bool(np.all(np.any(D.data != 0, axis=1)))


def check_blocks(inst: IqpInstance) -> None:
    """Assert the block conditions on the pre-obfuscation matrix."""
    c = inst.construction
    p = inst.params
    F, D, R = c.blocks["F"], c.blocks["D"], c.blocks["R"]
    Da = D.to_array()
    assert all(int(col.sum()) % 4 == 0 for col in Da.T)
    assert gram(D).is_zero() and rank(D) == p.d
    assert rank(gram(F)) == p.g
    assert mat_mul(D.T, F).is_zero()
    expected = np.zeros(p.m, dtype=np.uint8)
    expected[: p.m1] = 1
    assert np.array_equal((c.H0 @ c.secret0).to_array(), expected)
    assert (R @ c.secret0).weight() == 0
    assert rank(c.H0) == p.n
