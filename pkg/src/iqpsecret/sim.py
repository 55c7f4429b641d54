"""Exact output distributions of small IQP circuits.

Each row h of the tableau contributes the gate exp(i pi/8 X^h), i.e.
omega^((I - X^h)/2) up to a global phase, with omega = exp(i pi/4).  All gates
are diagonal after a Hadamard transform, so the amplitude vector is the
Walsh-Hadamard transform of exp(i theta c(y)) where c is itself the transform
of the row histogram.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .f2la import BitMatrix, BitVector

MAX_QUBITS = 16
THETA = np.pi / 8


class TooLarge(ValueError):
    pass


def walsh_hadamard(a: np.ndarray) -> np.ndarray:
    """Unnormalized transform: out[y] = sum_v (-1)^{popcount(v & y)} a[v]."""
    n = int(a.size).bit_length() - 1
    if a.size != 1 << n:
        raise ValueError("length must be a power of two")
    out = np.array(a, dtype=np.result_type(a, np.float64), copy=True)
    h = 1
    while h < out.size:
        v = out.reshape(-1, 2, h)
        lo = v[:, 0, :].copy()
        v[:, 0, :] += v[:, 1, :]
        v[:, 1, :] = lo - v[:, 1, :]
        h *= 2
    return out


def _row_codes(H: BitMatrix) -> np.ndarray:
    weights = 1 << np.arange(H.cols, dtype=np.int64)
    return H.to_array().astype(np.int64) @ weights


@dataclass(frozen=True)
class IqpDistribution:
    n: int
    probs: np.ndarray

    def prob(self, x: BitVector) -> float:
        return float(self.probs[x.to_int()])


def simulate(H: BitMatrix, theta: float = THETA) -> IqpDistribution:
    n = H.cols
    if n > MAX_QUBITS:
        raise TooLarge(f"{n} qubits exceeds the limit of {MAX_QUBITS}")
    size = 1 << n
    counts = np.bincount(_row_codes(H), minlength=size).astype(np.float64) if H.rows else np.zeros(size)
    c = walsh_hadamard(counts)                       # sum over rows of (-1)^{h.y}
    amp = walsh_hadamard(np.exp(1j * theta * c)) / size
    probs = np.abs(amp) ** 2
    return IqpDistribution(n=n, probs=probs)


def _parities(n: int, s: BitVector) -> np.ndarray:
    x = np.arange(1 << n, dtype=np.int64)
    return np.bitwise_count(x & s.to_int()) & 1


def bias_of(dist: IqpDistribution, s: BitVector) -> float:
    """Pr[<x, s> = 0] under dist."""
    if s.len != dist.n:
        raise ValueError("secret length does not match the distribution")
    return float(dist.probs[_parities(dist.n, s) == 0].sum())


def sample_indices(dist: IqpDistribution, count: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    p = dist.probs / dist.probs.sum()
    return rng.choice(p.size, size=count, p=p)


def sample(dist: IqpDistribution, count: int, rng) -> list[BitVector]:
    return [BitVector.from_int(int(i), dist.n) for i in sample_indices(dist, count, rng)]


def samples_to_array(idx: np.ndarray, n: int) -> np.ndarray:
    """Sample indices as a (count, n) 0/1 array, coordinate j = bit j."""
    return ((np.asarray(idx, dtype=np.int64)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
