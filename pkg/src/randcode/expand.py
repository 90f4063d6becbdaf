"""Keyed counter-mode expanders: seed plus (row, chunk) counters to pseudorandom bytes.

An expander maps ``(tau, row, chunk)`` to exactly :data:`CHUNK_BYTES` bytes.
Each chunk depends only on its own three inputs, so rows and chunks can be
produced in any order or in parallel.  Two algorithms are provided:

``philox`` (default, fast)
    Philox4x64-10 keyed with the first 16 bytes of ``tau`` read as a
    little-endian integer.  Chunk ``j`` of row ``l`` is the eight 64-bit
    outputs produced from counter ``(2j, 0, l, 0)``, serialized little-endian.

``blake2b`` (cryptographic)
    ``BLAKE2b(key=tau, digest_size=64)`` over the 16-byte message
    ``l || j`` (two little-endian uint64).
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

CHUNK_BYTES = 64
_WORDS_PER_CHUNK = CHUNK_BYTES // 8


def n_chunks(nbytes: int) -> int:
    return -(-nbytes // CHUNK_BYTES)


class PhiloxExpander:
    name = "philox"
    code = 1

    @staticmethod
    def _key(tau: bytes) -> int:
        return int.from_bytes(tau[:16].ljust(16, b"\0"), "little")

    def chunk(self, tau: bytes, row: int, j: int) -> bytes:
        bitgen = np.random.Philox(key=self._key(tau), counter=[2 * j, 0, row, 0])
        return bitgen.random_raw(_WORDS_PER_CHUNK).astype("<u8").tobytes()

    def stream(self, tau: bytes, row: int, nbytes: int) -> np.ndarray:
        k = n_chunks(nbytes)
        bitgen = np.random.Philox(key=self._key(tau), counter=[0, 0, row, 0])
        words = bitgen.random_raw(k * _WORDS_PER_CHUNK).astype("<u8")
        return words.view(np.uint8)[:nbytes]


class Blake2bExpander:
    name = "blake2b"
    code = 2

    def chunk(self, tau: bytes, row: int, j: int) -> bytes:
        return hashlib.blake2b(struct.pack("<QQ", row, j), key=tau, digest_size=CHUNK_BYTES).digest()

    def stream(self, tau: bytes, row: int, nbytes: int) -> np.ndarray:
        data = b"".join(self.chunk(tau, row, j) for j in range(n_chunks(nbytes)))
        return np.frombuffer(data, dtype=np.uint8)[:nbytes]


EXPANDERS = {cls.name: cls for cls in (PhiloxExpander, Blake2bExpander)}


def get_expander(name_or_obj="philox"):
    if isinstance(name_or_obj, str):
        try:
            return EXPANDERS[name_or_obj]()
        except KeyError:
            raise ValueError(f"unknown expander {name_or_obj!r}; choose from {sorted(EXPANDERS)}") from None
    return name_or_obj
