"""CRC-32 and Adler-32 as used by PNG chunk emission/validation.

Thin wrappers over zlib so every caller gets the same unsigned 32-bit
convention.  The values follow the standard reflected CRC-32
(check value: crc32(b"123456789") == 0xCBF43926).
"""

from __future__ import annotations

import zlib


def crc32(data: bytes, value: int = 0) -> int:
    """Unsigned CRC-32 of ``data``; ``value`` chains partial results."""
    return zlib.crc32(data, value) & 0xFFFFFFFF


def adler32(data: bytes, value: int = 1) -> int:
    """Unsigned Adler-32 of ``data``; ``value`` chains partial results."""
    return zlib.adler32(data, value) & 0xFFFFFFFF
