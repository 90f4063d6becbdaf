"""Bob's codebook tables: truly random, quantile-discretized and seed-expanded.

Indices are 0-based throughout: the secret index ``u`` lies in ``range(q)``.

Bit layout of a discretized vector: each symbol is written as ``b`` bits,
most significant bit first, symbols concatenated in order; the ``n*b`` bits
are packed into ``ceil(n*b/8)`` bytes with zero padding in the last byte.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri

from .channel import make_rng
from .expand import get_expander


@dataclass(frozen=True, eq=False)
class CodebookTable:
    """A ``q x n`` table with Bob's outcome hidden at row ``u``.

    ``u`` belongs to Bob; Alice only ever sees :meth:`public`.
    """

    rows: np.ndarray
    u: int

    @property
    def q(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    def fakes(self) -> np.ndarray:
        return np.delete(self.rows, self.u, axis=0)

    def public(self) -> "RealTableProvider":
        return RealTableProvider(self.rows)


class RealTableProvider:
    """Row provider over a real-valued table (no knowledge of ``u``)."""

    def __init__(self, rows: np.ndarray):
        self._rows = np.asarray(rows, dtype=np.float64)

    @property
    def q(self) -> int:
        return self._rows.shape[0]

    @property
    def n(self) -> int:
        return self._rows.shape[1]

    def rows(self, start: int, stop: int) -> np.ndarray:
        return self._rows[start:stop]


def build_random_table(y, q: int, sigma_y2: float, rng_seed) -> CodebookTable:
    """Hide ``y`` among ``q - 1`` i.i.d. ``N(0, sigma_y2)`` fake rows.

    The generator first draws ``u``, then the fakes ``z`` as a
    ``(q - 1, n)`` array.  Rows below ``u`` are ``z[:u]``, row ``u`` is ``y``
    and rows above ``u`` are ``z[u:]``.
    """
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    y = np.asarray(y, dtype=np.float64)
    rng = make_rng(rng_seed)
    u = int(rng.integers(q))
    z = rng.standard_normal((q - 1, y.shape[0])) * math.sqrt(sigma_y2)
    rows = np.empty((q, y.shape[0]))
    rows[:u] = z[:u]
    rows[u] = y
    rows[u + 1:] = z[u:]
    return CodebookTable(rows, u)


# -- quantile discretization -------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuantizedVector:
    symbols: np.ndarray
    b: int

    def __post_init__(self):
        if self.symbols.size and int(self.symbols.max()) >= (1 << self.b):
            raise ValueError("symbol exceeds 2**b - 1")

    @property
    def n(self) -> int:
        return self.symbols.shape[0]


def _check_b(b: int) -> None:
    if not 1 <= b <= 16:
        raise ValueError(f"bit depth must be in [1, 16], got {b}")


def quantize(v, sigma: float, b: int = 8) -> QuantizedVector:
    """Equal-probability cells: ``floor(2**b * Phi(v / sigma))``, top cell closed."""
    _check_b(b)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    levels = 1 << b
    p = ndtr(np.asarray(v, dtype=np.float64) / sigma)
    s = np.minimum(np.floor(p * levels), levels - 1).astype(np.uint16)
    return QuantizedVector(s, b)


@lru_cache(maxsize=None)
def cell_midpoints(b: int) -> np.ndarray:
    """Standard-normal quantile at the probability midpoint of each cell."""
    _check_b(b)
    levels = 1 << b
    mid = ndtri((np.arange(levels) + 0.5) / levels)
    mid.flags.writeable = False
    return mid


def dequantize(qv: QuantizedVector, sigma: float) -> np.ndarray:
    return sigma * cell_midpoints(qv.b)[qv.symbols]


def pack_symbols(qv: QuantizedVector) -> np.ndarray:
    if qv.b == 8:
        return qv.symbols.astype(np.uint8)
    shifts = np.arange(qv.b - 1, -1, -1, dtype=np.uint16)
    bits = ((qv.symbols[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.ravel())


def unpack_symbols(packed: np.ndarray, n: int, b: int) -> QuantizedVector:
    if b == 8:
        return QuantizedVector(packed[:n].astype(np.uint16), b)
    bits = np.unpackbits(packed, count=n * b).reshape(n, b).astype(np.uint16)
    weights = (1 << np.arange(b - 1, -1, -1)).astype(np.uint16)
    return QuantizedVector(bits @ weights, b)


# -- seed-expanded variant ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class PseudorandomCodebook:
    """Public pair ``(tau, mu)`` from which every row of the table is rebuilt."""

    tau: bytes
    mu: np.ndarray
    q: int
    n: int
    b: int
    expander: object

    @property
    def nbytes(self) -> int:
        return -(-self.n * self.b // 8)


def _mask(expander, tau: bytes, row: int, n: int, b: int) -> np.ndarray:
    nbits = n * b
    a = expander.stream(tau, row, -(-nbits // 8)).copy()
    pad = -nbits % 8
    if pad:
        a[-1] &= (0xFF << pad) & 0xFF
    return a


def pr_encode(y_quantized: QuantizedVector, u: int, q: int, tau: bytes, expander="philox") -> PseudorandomCodebook:
    """Mask Bob's discretized outcome with the expansion of ``(tau, u)``."""
    if not 0 <= u < q:
        raise ValueError(f"u must lie in [0, {q}), got {u}")
    expander = get_expander(expander)
    n, b = y_quantized.n, y_quantized.b
    mu = pack_symbols(y_quantized) ^ _mask(expander, tau, u, n, b)
    mu.flags.writeable = False
    return PseudorandomCodebook(bytes(tau), mu, int(q), n, b, expander)


def pr_reconstruct_row(codebook: PseudorandomCodebook, l: int) -> QuantizedVector:
    if not 0 <= l < codebook.q:
        raise ValueError(f"row index must lie in [0, {codebook.q}), got {l}")
    packed = codebook.mu ^ _mask(codebook.expander, codebook.tau, l, codebook.n, codebook.b)
    return unpack_symbols(packed, codebook.n, codebook.b)


class PseudorandomRowProvider:
    """Rebuilds rows on demand and maps symbols to scaled cell midpoints."""

    def __init__(self, codebook: PseudorandomCodebook, sigma_y: float):
        self.codebook = codebook
        self.sigma_y = sigma_y
        self._levels = sigma_y * cell_midpoints(codebook.b)

    @property
    def q(self) -> int:
        return self.codebook.q

    @property
    def n(self) -> int:
        return self.codebook.n

    def symbols(self, start: int, stop: int) -> np.ndarray:
        if stop <= start:
            return np.empty((0, self.n), dtype=np.uint16)
        return np.stack([pr_reconstruct_row(self.codebook, l).symbols for l in range(start, stop)])

    def rows(self, start: int, stop: int) -> np.ndarray:
        return self._levels[self.symbols(start, stop)]


# -- serialization -------------------------------------------------------------

MAGIC = b"RCBK"
VERSION = 1
_HEADER = struct.Struct("<4sHQQBB")
VARIANT_REAL = 0


def dump_codebook(table) -> bytes:
    """Serialize the public part of a table.

    Header ``<4sHQQBB``: magic ``RCBK``, version, q, n, b, variant.
    Variant 0 is followed by ``q*n`` little-endian float64 values (row-major,
    ``b`` is 0).  Variants 1 (philox) and 2 (blake2b) are followed by
    ``uint32`` length + ``tau`` and ``uint64`` length + ``mu``.
    """
    if isinstance(table, CodebookTable):
        table = table.public()
    if isinstance(table, RealTableProvider):
        rows = table.rows(0, table.q)
        head = _HEADER.pack(MAGIC, VERSION, table.q, table.n, 0, VARIANT_REAL)
        return head + rows.astype("<f8").tobytes()
    if isinstance(table, PseudorandomCodebook):
        head = _HEADER.pack(MAGIC, VERSION, table.q, table.n, table.b, table.expander.code)
        mu = bytes(table.mu)
        return head + struct.pack("<I", len(table.tau)) + table.tau + struct.pack("<Q", len(mu)) + mu
    raise TypeError(f"cannot serialize {type(table).__name__}")


def load_codebook(data: bytes):
    magic, version, q, n, b, variant = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError("not a codebook blob")
    if version != VERSION:
        raise ValueError(f"unsupported codebook version {version}")
    off = _HEADER.size
    if variant == VARIANT_REAL:
        rows = np.frombuffer(data, dtype="<f8", count=q * n, offset=off).reshape(q, n)
        return RealTableProvider(rows.astype(np.float64))
    codes = {1: "philox", 2: "blake2b"}
    if variant not in codes:
        raise ValueError(f"unknown codebook variant {variant}")
    (tlen,) = struct.unpack_from("<I", data, off)
    off += 4
    tau = bytes(data[off:off + tlen])
    off += tlen
    (mlen,) = struct.unpack_from("<Q", data, off)
    off += 8
    mu = np.frombuffer(data, dtype=np.uint8, count=mlen, offset=off).copy()
    return PseudorandomCodebook(tau, mu, q, n, b, get_expander(codes[variant]))
