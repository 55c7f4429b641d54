"""(Extended) quadratic-residue-code instances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .f2la import BitMatrix, BitVector, EchelonBasis, Subspace, random_bits, rank
from .scheme import (
    Construction,
    Family,
    InstanceParams,
    IqpInstance,
    SamplingExhaustion,
    make_rng,
    obfuscate,
)

# Primes with q + 1 = 0 mod 8 that the generator is exercised on.
SUPPORTED_PRIMES = (7, 23, 31, 47, 71, 103, 127, 151, 167, 223)


class InvalidPrime(ValueError):
    pass


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % f for f in range(2, int(q ** 0.5) + 1))


def check_prime(q: int) -> None:
    if not _is_prime(q):
        raise InvalidPrime(f"{q} is not prime")
    if (q + 1) % 8:
        raise InvalidPrime(f"q={q} violates q + 1 = 0 mod 8")


@dataclass(frozen=True)
class QrcParams:
    q: int
    n: int | None = None

    def __post_init__(self):
        check_prime(self.q)
        if self.n is None:
            object.__setattr__(self, "n", self.q + self.r)
        if not self.r <= self.n <= self.q + self.r:
            raise ValueError(f"n={self.n} outside [{self.r}, {self.q + self.r}]")

    @property
    def r(self) -> int:
        return (self.q + 1) // 2

    @property
    def m(self) -> int:
        return 2 * self.q

    def instance_params(self) -> InstanceParams:
        # g = 1, the radical is the even-weight subcode of dimension r - 1
        return InstanceParams(n=self.n, m=self.m, g=1, m1=self.q, d=self.r - 1)


def qr_indicator(q: int) -> np.ndarray:
    v = np.zeros(q, dtype=np.uint8)
    v[sorted({(i * i) % q for i in range(1, q)})] = 1
    return v


def qrc_generator(q: int) -> BitMatrix:
    """q x r generator matrix of the binary QR code of length q.

    Columns form a basis of the span of the cyclic shifts of the residue
    indicator; the first column is the all-ones vector.
    """
    check_prime(q)
    ind = qr_indicator(q)
    shifts = BitMatrix.from_array(np.stack([np.roll(ind, k) for k in range(q)]))
    code = Subspace.from_rows(shifts)
    r = (q + 1) // 2
    if code.dim != r:
        raise InvalidPrime(f"cyclic span has dimension {code.dim}, expected {r}")
    ones = (1 << q) - 1
    basis = EchelonBasis([ones])
    cols = [ones]
    for v in code.basis_rows().row_ints():
        if basis.add(v):
            cols.append(v)
    if len(cols) != r:
        raise InvalidPrime("all-ones vector is not a codeword")
    return BitMatrix.from_int_rows(cols, q).T


def build_qrc_instance(params: QrcParams, rng=None, *, seed=None, max_tries: int = 1000) -> IqpInstance:
    """Obfuscated (extended) QRC instance with planted secret.

    Pre-obfuscation layout: the top q rows hold the code basis (first column
    all ones) and zeros on the n - r extra columns; the bottom q rows are
    uniformly random with first entry 0.  The bottom block is redrawn until
    H has full column rank.
    """
    if rng is None:
        rng = make_rng(seed)
    rng = make_rng(rng)
    q, r, n = params.q, params.r, params.n
    top = np.zeros((q, n), dtype=np.uint8)
    top[:, :r] = qrc_generator(q).to_array()
    for _ in range(max_tries):
        bottom = random_bits(rng, q, n)
        bottom[:, 0] = 0
        H0 = BitMatrix.from_array(np.vstack([top, bottom]))
        if rank(H0) == n:
            break
    else:
        raise SamplingExhaustion(f"no full-rank QRC instance for q={q}, n={n}")
    s0 = BitVector.unit(n, 0)
    H, s, perm, Q = obfuscate(H0, s0, rng)
    family = Family.QRC if n == r else Family.EXTENDED_QRC
    construction = Construction(H0=H0, secret0=s0, perm=perm, Q=Q, redundancy_mode="uniform",
                                blocks=dict(top=BitMatrix.from_array(top), bottom=BitMatrix.from_array(bottom)))
    return IqpInstance(H=H, secret=s, params=params.instance_params(), family=family,
                       seed=seed if isinstance(seed, int) else None, construction=construction)
