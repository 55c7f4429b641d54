"""Dense linear algebra over GF(2) with bit-packed rows.

Rows are stored as ``uint64`` words, least significant bit first: column ``c``
lives in word ``c // 64`` at bit ``c % 64``.  Padding bits past the last
column are always zero.  All objects are treated as immutable.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

WORD = 64
_ONE = np.uint64(1)

# Cap on the (rows x cols x words) temporary used by products.
_PRODUCT_CHUNK = 1 << 21


class ShapeError(ValueError):
    pass


class NoSolution(ArithmeticError):
    """The right-hand side is not in the column space."""


def nwords(ncols: int) -> int:
    return (ncols + WORD - 1) // WORD


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a 2-d 0/1 array into uint64 words row by row."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 2:
        raise ShapeError("pack_bits expects a 2-d array")
    r, c = bits.shape
    w = nwords(c)
    if w == 0:
        return np.zeros((r, 0), dtype=np.uint64)
    padded = np.zeros((r, w * WORD), dtype=np.uint8)
    padded[:, :c] = bits & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(data: np.ndarray, ncols: int) -> np.ndarray:
    data = np.ascontiguousarray(data, dtype=np.uint64)
    if data.shape[1] == 0:
        return np.zeros((data.shape[0], ncols), dtype=np.uint8)
    raw = data.astype("<u8", copy=False).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :ncols]


def _tail_mask(ncols: int) -> np.ndarray:
    w = nwords(ncols)
    mask = np.full(w, np.iinfo(np.uint64).max, dtype=np.uint64)
    if ncols % WORD:
        mask[-1] = np.uint64((1 << (ncols % WORD)) - 1)
    return mask


class BitVector:
    """Element of F_2^n."""

    __slots__ = ("len", "bits")

    def __init__(self, length: int, bits: np.ndarray | None = None):
        self.len = int(length)
        if bits is None:
            bits = np.zeros(nwords(self.len), dtype=np.uint64)
        bits = np.asarray(bits, dtype=np.uint64)
        if bits.shape != (nwords(self.len),):
            raise ShapeError(f"expected {nwords(self.len)} words, got {bits.shape}")
        if self.len and np.any(bits & ~_tail_mask(self.len)):
            raise ValueError("nonzero padding bits")
        self.bits = bits
        self.bits.flags.writeable = False

    @classmethod
    def from_array(cls, values: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values)
        arr = arr.astype(np.uint8).reshape(1, -1)
        return cls(arr.shape[1], pack_bits(arr)[0])

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitVector":
        w = nwords(length)
        raw = int(value).to_bytes(w * 8, "little")
        return cls(length, np.frombuffer(raw, dtype="<u8").astype(np.uint64))

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length)

    @classmethod
    def unit(cls, length: int, index: int) -> "BitVector":
        return cls.from_indices(length, [index])

    @classmethod
    def from_indices(cls, length: int, indices: Iterable[int]) -> "BitVector":
        arr = np.zeros(length, dtype=np.uint8)
        arr[list(indices)] = 1
        return cls.from_array(arr)

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls.from_array(np.ones(length, dtype=np.uint8))

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.bits.reshape(1, -1), self.len)[0]

    def to_int(self) -> int:
        return int.from_bytes(self.bits.astype("<u8").tobytes(), "little")

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.to_array())

    def weight(self) -> int:
        return int(np.bitwise_count(self.bits).sum())

    def dot(self, other: "BitVector") -> int:
        if other.len != self.len:
            raise ShapeError("length mismatch")
        return int(np.bitwise_count(self.bits & other.bits).sum() & 1)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.len:
            raise IndexError(i)
        return int((self.bits[i // WORD] >> np.uint64(i % WORD)) & _ONE)

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.len != self.len:
            raise ShapeError("length mismatch")
        return BitVector(self.len, self.bits ^ other.bits)

    __add__ = __xor__

    def __and__(self, other: "BitVector") -> "BitVector":
        if other.len != self.len:
            raise ShapeError("length mismatch")
        return BitVector(self.len, self.bits & other.bits)

    def __bool__(self) -> bool:
        return bool(np.any(self.bits))

    def __len__(self) -> int:
        return self.len

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.len == other.len and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash((self.len, self.bits.tobytes()))

    def __repr__(self) -> str:
        s = "".join(map(str, self.to_array()))
        return f"BitVector({s!r})"


hamming_weight = BitVector.weight


class BitMatrix:
    """m x n matrix over GF(2), rows packed into uint64 words."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: np.ndarray | None = None):
        self.rows = int(rows)
        self.cols = int(cols)
        if data is None:
            data = np.zeros((self.rows, nwords(self.cols)), dtype=np.uint64)
        data = np.ascontiguousarray(data, dtype=np.uint64)
        if data.shape != (self.rows, nwords(self.cols)):
            raise ShapeError(f"data shape {data.shape} does not fit {rows}x{cols}")
        self.data = data
        self.data.flags.writeable = False

    # construction -----------------------------------------------------

    @classmethod
    def from_array(cls, arr) -> "BitMatrix":
        a = np.asarray(arr, dtype=np.uint8)
        if a.ndim != 2:
            raise ShapeError("expected a 2-d array")
        return cls(a.shape[0], a.shape[1], pack_bits(a))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8))

    @classmethod
    def from_rows(cls, vectors: Sequence[BitVector], cols: int | None = None) -> "BitMatrix":
        if not vectors:
            if cols is None:
                raise ShapeError("cannot infer width of an empty row list")
            return cls(0, cols)
        n = vectors[0].len
        if any(v.len != n for v in vectors):
            raise ShapeError("rows of unequal length")
        return cls(len(vectors), n, np.stack([v.bits for v in vectors]))

    @classmethod
    def from_columns(cls, vectors: Sequence[BitVector], rows: int | None = None) -> "BitMatrix":
        if not vectors:
            if rows is None:
                raise ShapeError("cannot infer height of an empty column list")
            return cls(rows, 0)
        return cls.from_rows(vectors).T

    @classmethod
    def from_int_rows(cls, values: Sequence[int], cols: int) -> "BitMatrix":
        w = nwords(cols)
        buf = b"".join(int(v).to_bytes(w * 8, "little") for v in values)
        data = np.frombuffer(buf, dtype="<u8").astype(np.uint64).reshape(len(values), w)
        return cls(len(values), cols, data)

    # views -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.data, self.cols)

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.data[i].copy())

    def column(self, j: int) -> BitVector:
        if not 0 <= j < self.cols:
            raise IndexError(j)
        bits = (self.data[:, j // WORD] >> np.uint64(j % WORD)) & _ONE
        return BitVector.from_array(bits.astype(np.uint8))

    def row_ints(self) -> list[int]:
        raw = self.data.astype("<u8").tobytes()
        step = self.data.shape[1] * 8
        return [int.from_bytes(raw[i * step:(i + 1) * step], "little") for i in range(self.rows)]

    def take_rows(self, index) -> "BitMatrix":
        data = self.data[np.asarray(index)]
        return BitMatrix(data.shape[0], self.cols, data)

    def take_columns(self, index) -> "BitMatrix":
        index = np.asarray(index, dtype=np.intp)
        return BitMatrix.from_array(self.to_array()[:, index])

    def vstack(self, *others: "BitMatrix") -> "BitMatrix":
        mats = (self,) + others
        if any(m.cols != self.cols for m in mats):
            raise ShapeError("column count mismatch")
        data = np.concatenate([m.data for m in mats], axis=0)
        return BitMatrix(data.shape[0], self.cols, data)

    def hstack(self, *others: "BitMatrix") -> "BitMatrix":
        mats = (self,) + others
        if any(m.rows != self.rows for m in mats):
            raise ShapeError("row count mismatch")
        return BitMatrix.from_array(np.concatenate([m.to_array() for m in mats], axis=1))

    @property
    def T(self) -> "BitMatrix":
        return transpose(self)

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            return mat_vec(self, other)
        return mat_mul(self, other)

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if other.shape != self.shape:
            raise ShapeError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.data ^ other.data)

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


# products ----------------------------------------------------------------


def _row_parities(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """out[i, j] = <x_i, y_j> over GF(2) for packed row arrays x, y."""
    m, w = x.shape
    n = y.shape[0]
    out = np.zeros((m, n), dtype=np.uint8)
    if m == 0 or n == 0 or w == 0:
        return out
    step = max(1, _PRODUCT_CHUNK // max(1, n * w))
    for start in range(0, m, step):
        block = x[start:start + step, None, :] & y[None, :, :]
        acc = np.bitwise_xor.reduce(block, axis=2)
        out[start:start + step] = np.bitwise_count(acc) & 1
    return out


def transpose(M: BitMatrix) -> BitMatrix:
    return BitMatrix(M.cols, M.rows, pack_bits(M.to_array().T))


def mat_mul(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    if A.cols != B.rows:
        raise ShapeError(f"cannot multiply {A.shape} by {B.shape}")
    Bt = transpose(B)
    return BitMatrix(A.rows, B.cols, pack_bits(_row_parities(A.data, Bt.data)))


def mat_vec(M: BitMatrix, v: BitVector) -> BitVector:
    if v.len != M.cols:
        raise ShapeError(f"cannot multiply {M.shape} by vector of length {v.len}")
    bits = np.bitwise_count(M.data & v.bits[None, :]).sum(axis=1) & 1
    return BitVector(M.rows, pack_bits(bits.astype(np.uint8).reshape(1, -1))[0])


def gram(H: BitMatrix) -> BitMatrix:
    """G = H^T H."""
    Ht = transpose(H)
    return BitMatrix(H.cols, H.cols, pack_bits(_row_parities(Ht.data, Ht.data)))


# elimination ---------------------------------------------------------------


def _rref(data: np.ndarray, ncols: int, limit: int | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of packed rows, pivoting on columns < ncols.

    With ``limit`` set, elimination stops once more than ``limit`` pivots are found.
    """
    A = np.array(data, dtype=np.uint64, copy=True)
    m = A.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == m:
            break
        w = c // WORD
        b = np.uint64(c % WORD)
        col = ((A[:, w] >> b) & _ONE).astype(bool)
        nz = np.flatnonzero(col[r:])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            A[[r, p]] = A[[p, r]]
            col[r], col[p] = col[p], col[r]
        col[r] = False
        if col.any():
            A[col] ^= A[r]
        pivots.append(c)
        r += 1
        if limit is not None and r > limit:
            break
    return A, pivots


def rref(M: BitMatrix) -> tuple[BitMatrix, list[int]]:
    data, pivots = _rref(M.data, M.cols)
    return BitMatrix(M.rows, M.cols, data), pivots


def rank(M: BitMatrix) -> int:
    # eliminate along the shorter side
    if M.rows > M.cols:
        M = transpose(M)
    return len(_rref(M.data, M.cols)[1])


def rank_exceeds(M: BitMatrix, bound: int) -> bool:
    """rank(M) > bound, stopping the elimination early."""
    if M.rows > M.cols:
        M = transpose(M)
    return len(_rref(M.data, M.cols, limit=bound)[1]) > bound


class Subspace:
    """Subspace of F_2^ambient_dim; ``basis`` holds independent generators as columns."""

    __slots__ = ("ambient_dim", "basis", "_echelon", "_pivots")

    def __init__(self, ambient_dim: int, echelon: np.ndarray, pivots: list[int]):
        self.ambient_dim = ambient_dim
        self._echelon = echelon
        self._echelon.flags.writeable = False
        self._pivots = pivots
        self.basis = transpose(BitMatrix(len(pivots), ambient_dim, echelon))

    @classmethod
    def span(cls, generators: BitMatrix) -> "Subspace":
        """Span of the columns of ``generators``."""
        return cls.from_rows(transpose(generators))

    @classmethod
    def from_rows(cls, vectors: BitMatrix) -> "Subspace":
        data, pivots = _rref(vectors.data, vectors.cols)
        return cls(vectors.cols, data[: len(pivots)], pivots)

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(ambient_dim, np.zeros((0, nwords(ambient_dim)), dtype=np.uint64), [])

    @property
    def dim(self) -> int:
        return len(self._pivots)

    def basis_rows(self) -> BitMatrix:
        return BitMatrix(self.dim, self.ambient_dim, self._echelon)

    def vectors(self) -> list[BitVector]:
        return [BitVector(self.ambient_dim, row.copy()) for row in self._echelon]

    def reduce(self, v: BitVector) -> BitVector:
        bits = v.bits.copy()
        for row, c in zip(self._echelon, self._pivots):
            if (bits[c // WORD] >> np.uint64(c % WORD)) & _ONE:
                bits ^= row
        return BitVector(v.len, bits)

    def __contains__(self, v: BitVector) -> bool:
        return contains(self, v)

    def elements(self) -> list[BitVector]:
        """All 2**dim members (small subspaces only)."""
        out = [BitVector.zeros(self.ambient_dim)]
        for row in self._echelon:
            b = BitVector(self.ambient_dim, row.copy())
            out += [x ^ b for x in out]
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.ambient_dim == other.ambient_dim and self._pivots == other._pivots
                and bool(np.array_equal(self._echelon, other._echelon)))

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self._echelon.tobytes()))

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, ambient={self.ambient_dim})"


def kernel_basis(M: BitMatrix) -> Subspace:
    """{v : M v = 0}."""
    n = M.cols
    data, pivots = _rref(M.data, n)
    r = len(pivots)
    free = [c for c in range(n) if c not in set(pivots)]
    K = np.zeros((n, len(free)), dtype=np.uint8)
    if free:
        R = unpack_bits(data[:r], n) if r else np.zeros((0, n), dtype=np.uint8)
        K[free, np.arange(len(free))] = 1
        if r:
            K[np.asarray(pivots)] = R[:, free]
    return Subspace.span(BitMatrix.from_array(K))


def solve(M: BitMatrix, b: BitVector) -> BitVector:
    """Some v with M v = b; free variables are set to zero."""
    if b.len != M.rows:
        raise ShapeError("right-hand side length mismatch")
    aug = np.concatenate([M.to_array(), b.to_array()[:, None]], axis=1)
    data, pivots = _rref(pack_bits(aug), M.cols)
    r = len(pivots)
    rhs = unpack_bits(data, M.cols + 1)[:, M.cols]
    if np.any(rhs[r:]):
        raise NoSolution("system is inconsistent")
    x = np.zeros(M.cols, dtype=np.uint8)
    if r:
        x[np.asarray(pivots)] = rhs[:r]
    return BitVector.from_array(x)


def inverse(M: BitMatrix) -> BitMatrix:
    n = M.rows
    if M.cols != n:
        raise ShapeError("inverse of a non-square matrix")
    aug = np.concatenate([M.to_array(), np.eye(n, dtype=np.uint8)], axis=1)
    data, pivots = _rref(pack_bits(aug), n)
    if len(pivots) != n:
        raise NoSolution("matrix is singular")
    return BitMatrix.from_array(unpack_bits(data, 2 * n)[:, n:])


# random sampling -----------------------------------------------------------


def random_bits(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.integers(0, 2, size=(rows, cols), dtype=np.uint8)


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> BitMatrix:
    return BitMatrix.from_array(random_bits(rng, rows, cols))


def random_vector(n: int, rng: np.random.Generator) -> BitVector:
    return BitVector.from_array(rng.integers(0, 2, size=n, dtype=np.uint8))


def random_invertible(n: int, rng: np.random.Generator) -> BitMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    while True:
        M = random_matrix(n, n, rng)
        if rank(M) == n:
            return M


def random_permutation_matrix(m: int, rng: np.random.Generator) -> BitMatrix:
    if m < 1:
        raise ValueError("m must be positive")
    return permutation_matrix(rng.permutation(m))


def permutation_matrix(perm: Sequence[int]) -> BitMatrix:
    """P with (P x)_i = x_{perm[i]}."""
    perm = np.asarray(perm, dtype=np.intp)
    P = np.zeros((perm.size, perm.size), dtype=np.uint8)
    P[np.arange(perm.size), perm] = 1
    return BitMatrix.from_array(P)


# subspaces -----------------------------------------------------------------


def support_of_columns(M: BitMatrix) -> np.ndarray:
    """Row indices on which some column of M is nonzero."""
    return np.flatnonzero(np.any(M.data != 0, axis=1))


def is_doubly_even_space(U: Subspace) -> bool:
    B = U.basis_rows()
    if any(np.bitwise_count(row).sum() % 4 for row in B.data):
        return False
    return not _row_parities(B.data, B.data).any()


def contains(U: Subspace, v: BitVector) -> bool:
    if v.len != U.ambient_dim:
        raise ShapeError("ambient dimension mismatch")
    return not U.reduce(v)


def subspace_sum(U: Subspace, V: Subspace) -> Subspace:
    if U.ambient_dim != V.ambient_dim:
        raise ShapeError("ambient dimension mismatch")
    return Subspace.from_rows(U.basis_rows().vstack(V.basis_rows()))


def subspace_intersection(U: Subspace, V: Subspace) -> Subspace:
    if U.ambient_dim != V.ambient_dim:
        raise ShapeError("ambient dimension mismatch")
    if U.dim == 0 or V.dim == 0:
        return Subspace.zero(U.ambient_dim)
    # U a = V b  <=>  (a, b) in ker [U | V]
    joint = U.basis.hstack(V.basis)
    K = kernel_basis(joint)
    if K.dim == 0:
        return Subspace.zero(U.ambient_dim)
    coeffs = K.basis.take_rows(np.arange(U.dim))
    return Subspace.span(mat_mul(U.basis, coeffs))


class EchelonBasis:
    """Incrementally grown row basis over Python ints (bit i = coordinate i)."""

    def __init__(self, rows: Iterable[int] = ()):
        self._by_lead: dict[int, int] = {}
        for r in rows:
            self.add(r)

    def reduce(self, v: int) -> int:
        by_lead = self._by_lead
        while v:
            lead = v.bit_length() - 1
            row = by_lead.get(lead)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        """Insert v; return True iff it increased the rank."""
        v = self.reduce(v)
        if not v:
            return False
        self._by_lead[v.bit_length() - 1] = v
        return True

    def __len__(self) -> int:
        return len(self._by_lead)


def batch_rank(data: np.ndarray, ncols: int) -> np.ndarray:
    """Ranks of a stack of packed matrices, shape (batch, rows, words)."""
    A = np.array(data, dtype=np.uint64, copy=True)
    B, R, _ = A.shape
    ranks = np.zeros(B, dtype=np.int64)
    rows = np.arange(R)
    for c in range(ncols):
        word, shift = divmod(c, WORD)
        col = ((A[:, :, word] >> np.uint64(shift)) & _ONE).astype(bool)
        eligible = col & (rows[None, :] >= ranks[:, None])
        has = eligible.any(axis=1)
        if not has.any():
            continue
        bs = np.flatnonzero(has)
        piv = eligible[bs].argmax(axis=1)
        tgt = ranks[bs]
        prow = A[bs, piv].copy()
        A[bs, piv] = A[bs, tgt]
        A[bs, tgt] = prow
        below = ((A[bs, :, word] >> np.uint64(shift)) & _ONE).astype(bool) & (rows[None, :] > tgt[:, None])
        A[bs] ^= np.where(below[:, :, None], prow[:, None, :], np.uint64(0))
        ranks[bs] += 1
    return ranks
