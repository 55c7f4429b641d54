"""Text formats for tableaux, secrets and samples.

MatrixFile:  header "m n", then m lines of n characters 0/1; lines starting
             with '#' are comments.
SecretFile:  one base64 line holding the n bits packed MSB-first into bytes,
             the last byte padded with zero bits on the right, then "n=<int>".
SampleFile:  one line of n characters 0/1 per sample.
"""

from __future__ import annotations

import base64
import binascii
import os
from pathlib import Path

import numpy as np

from .f2la import BitMatrix, BitVector

BREMNER_FORMAT_VERSION = "1"


class FormatError(ValueError):
    """Malformed input; message carries the offending line number when known."""


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _bitline(bits: np.ndarray) -> str:
    return (np.asarray(bits, dtype=np.uint8) + ord("0")).tobytes().decode("ascii")


def _parse_bitline(line: str, n: int, lineno: int) -> np.ndarray:
    if len(line) != n:
        raise FormatError(f"line {lineno}: expected {n} characters, got {len(line)}")
    raw = np.frombuffer(line.encode("ascii", errors="replace"), dtype=np.uint8) - ord("0")
    if np.any(raw > 1):
        raise FormatError(f"line {lineno}: characters other than 0/1")
    return raw


# matrices --------------------------------------------------------------------


def emit_matrix(M: BitMatrix, comments=()) -> str:
    lines = [f"{M.rows} {M.cols}"]
    lines += [_bitline(row) for row in M.to_array()]
    lines += [f"# {c}" for c in comments]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> BitMatrix:
    header = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2 or not all(p.isdigit() for p in parts):
                raise FormatError(f"line {lineno}: expected header 'm n'")
            header = (int(parts[0]), int(parts[1]))
            continue
        if len(rows) == header[0]:
            raise FormatError(f"line {lineno}: more than {header[0]} data lines")
        rows.append(_parse_bitline(line, header[1], lineno))
    if header is None:
        raise FormatError("empty matrix file")
    m, n = header
    if len(rows) != m:
        raise FormatError(f"expected {m} data lines, found {len(rows)}")
    if m == 0:
        return BitMatrix.zeros(0, n)
    return BitMatrix.from_array(np.stack(rows))


def read_matrix(path) -> BitMatrix:
    return parse_matrix(Path(path).read_text())


def write_matrix(path, M: BitMatrix, comments=()) -> None:
    atomic_write_text(path, emit_matrix(M, comments))


def parse_bremner_matrix(text: str) -> BitMatrix:
    """Best-effort reader for header-less tableaux as written by numpy.savetxt.

    Accepts rows of whitespace/comma separated 0/1 entries (integers or floats)
    or rows of contiguous 0/1 characters; '#' lines are skipped.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.replace(",", " ").split()
        if len(tokens) == 1 and set(tokens[0]) <= {"0", "1"}:
            vals = [int(c) for c in tokens[0]]
        else:
            try:
                vals = [int(float(t)) for t in tokens]
            except ValueError:
                raise FormatError(f"line {lineno}: not a 0/1 row") from None
        if any(v not in (0, 1) for v in vals):
            raise FormatError(f"line {lineno}: entries other than 0/1")
        if rows and len(vals) != len(rows[0]):
            raise FormatError(f"line {lineno}: row length {len(vals)} differs from {len(rows[0])}")
        rows.append(vals)
    if not rows:
        raise FormatError("no rows found")
    return BitMatrix.from_array(np.array(rows, dtype=np.uint8))


def read_any_matrix(path, bremner: bool = False) -> BitMatrix:
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path)
        if arr.ndim != 2 or not np.isin(arr, (0, 1)).all():
            raise FormatError(f"{path}: expected a 2-d 0/1 array")
        return BitMatrix.from_array(arr.astype(np.uint8))
    text = path.read_text()
    return parse_bremner_matrix(text) if bremner else parse_matrix(text)


# secrets ---------------------------------------------------------------------


def encode_secret(s: BitVector) -> str:
    return base64.b64encode(np.packbits(s.to_array()).tobytes()).decode("ascii")


def decode_secret(b64: str, n: int) -> BitVector:
    try:
        raw = base64.b64decode(b64.strip(), validate=True)
    except (binascii.Error, ValueError) as exc:
        raise FormatError(f"invalid base64: {exc}") from None
    if len(raw) != (n + 7) // 8:
        raise FormatError(f"{len(raw)} bytes cannot hold exactly n={n} bits")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    if bits[n:].any():
        raise FormatError("nonzero padding bits")
    return BitVector.from_array(bits[:n])


def emit_secret(s: BitVector) -> str:
    return f"{encode_secret(s)}\nn={s.len}\n"


def parse_secret(text: str, n: int | None = None) -> BitVector:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty secret file")
    b64 = lines[0]
    for ln in lines[1:]:
        if ln.startswith("n="):
            try:
                n_file = int(ln[2:])
            except ValueError:
                raise FormatError(f"bad length line {ln!r}") from None
            if n is not None and n != n_file:
                raise FormatError(f"secret has n={n_file}, expected {n}")
            n = n_file
    if n is None:
        raise FormatError("secret length unknown: missing 'n=' line")
    return decode_secret(b64, n)


def read_secret(path, n: int | None = None) -> BitVector:
    return parse_secret(Path(path).read_text(), n)


def write_secret(path, s: BitVector) -> None:
    atomic_write_text(path, emit_secret(s))


# samples ---------------------------------------------------------------------


def emit_samples(samples: np.ndarray) -> str:
    samples = np.asarray(samples, dtype=np.uint8)
    return "".join(_bitline(row) + "\n" for row in samples)


def parse_samples(text: str, n: int | None = None) -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            n = len(line)
        rows.append(_parse_bitline(line, n, lineno))
    if not rows:
        raise FormatError("no samples")
    return np.stack(rows)


def read_samples(path, n: int | None = None) -> np.ndarray:
    return parse_samples(Path(path).read_text(), n)


def write_samples(path, samples: np.ndarray) -> None:
    atomic_write_text(path, emit_samples(samples))
