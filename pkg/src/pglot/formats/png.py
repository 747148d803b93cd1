"""PNG chunk parsing, CRC validation, and minimal emission.

A PNG is the 8-byte signature followed by chunks:

    u32 length (big-endian) | 4-byte type | data | u32 CRC-32(type+data)

Validation checks signature, chunk bounds, IHDR first, IEND last, and
every chunk CRC.  The logical end is one past the IEND chunk's CRC.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from pglot.formats import checksums
from pglot.formats.types import FormatId, InsertionPoint, ParseReport, PointKind

SIGNATURE = b"\x89PNG\r\n\x1a\n"

CRITICAL = {b"IHDR", b"PLTE", b"IDAT", b"IEND"}
# Registered ancillary types; anything outside this set is "unknown".
REGISTERED_ANCILLARY = {
    b"tRNS", b"gAMA", b"cHRM", b"sRGB", b"iCCP", b"sBIT", b"bKGD", b"pHYs",
    b"hIST", b"tIME", b"tEXt", b"zTXt", b"iTXt", b"sPLT", b"acTL", b"fcTL",
    b"fdAT",
}

PARASITE_CHUNK_TYPE = b"pyLd"  # ancillary, private, safe-to-copy


@dataclass(frozen=True)
class Chunk:
    offset: int          # of the length field
    length: int          # data length
    type: bytes
    data_offset: int

    @property
    def end(self) -> int:
        return self.data_offset + self.length + 4

    def raw(self, data: bytes) -> bytes:
        return data[self.offset:self.end]

    def payload(self, data: bytes) -> bytes:
        return data[self.data_offset:self.data_offset + self.length]


def matches(data: bytes) -> bool:
    return data.startswith(SIGNATURE)


def iter_chunks(data: bytes) -> tuple[list[Chunk], str | None]:
    """Walk chunks until IEND; returns (chunks, error or None)."""
    chunks: list[Chunk] = []
    pos = len(SIGNATURE)
    n = len(data)
    while True:
        if pos + 8 > n:
            return chunks, f"truncated chunk header at offset {pos}"
        length = struct.unpack_from(">I", data, pos)[0]
        ctype = data[pos + 4:pos + 8]
        if length > n - pos - 8:
            return chunks, f"chunk {ctype!r} length {length} exceeds file"
        if pos + 8 + length + 4 > n:
            return chunks, f"chunk {ctype!r} missing CRC"
        chunks.append(Chunk(pos, length, ctype, pos + 8))
        pos += 8 + length + 4
        if ctype == b"IEND":
            return chunks, None


def parse(data: bytes) -> ParseReport:
    rep = ParseReport(FormatId.PNG, valid=False)
    if not matches(data):
        rep.note("missing PNG signature")
        return rep
    chunks, err = iter_chunks(data)
    if err is not None:
        rep.note(err)
        return rep
    if not chunks or chunks[0].type != b"IHDR":
        rep.note("first chunk is not IHDR")
        return rep
    if not any(c.type == b"IDAT" for c in chunks):
        rep.note("no IDAT chunk")
        return rep
    for c in chunks:
        want = struct.unpack_from(">I", data, c.end - 4)[0]
        got = checksums.crc32(data[c.offset + 4:c.end - 4])
        if want != got:
            rep.note(f"bad CRC in chunk {c.type.decode('latin-1')} at offset {c.offset}")
            return rep
    rep.valid = True
    rep.logical_end = chunks[-1].end
    return rep


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    chunks, _ = iter_chunks(data)
    ihdr_end = chunks[0].end
    return [
        InsertionPoint(PointKind.ANCILLARY_CHUNK, ihdr_end, None),
        InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None),
    ]


def unknown_chunk_spans(data: bytes) -> list[tuple[int, int, bytes]]:
    """(data offset, length, type) of chunks outside the registered sets."""
    chunks, _ = iter_chunks(data)
    out = []
    for c in chunks:
        if c.type not in CRITICAL and c.type not in REGISTERED_ANCILLARY:
            out.append((c.data_offset, c.length, c.type))
    return out


def make_chunk(ctype: bytes, payload: bytes) -> bytes:
    crc = checksums.crc32(ctype + payload)
    return struct.pack(">I", len(payload)) + ctype + payload + struct.pack(">I", crc)


def insert_parasite_chunk(data: bytes, payload: bytes) -> tuple[bytes, int]:
    """Insert a pyLd chunk after IHDR; returns (bytes, payload offset)."""
    chunks, err = iter_chunks(data)
    if err is not None or not chunks or chunks[0].type != b"IHDR":
        raise ValueError("not a structurally sound PNG")
    at = chunks[0].end
    chunk = make_chunk(PARASITE_CHUNK_TYPE, payload)
    return data[:at] + chunk + data[at:], at + 8


def _stored_deflate(raw: bytes) -> bytes:
    """A zlib stream using only stored (uncompressed) deflate blocks."""
    out = bytearray(b"\x78\x01")
    if not raw:
        out += b"\x01\x00\x00\xff\xff"
    else:
        for i in range(0, len(raw), 65535):
            block = raw[i:i + 65535]
            final = 1 if i + 65535 >= len(raw) else 0
            out.append(final)
            out += struct.pack("<HH", len(block), len(block) ^ 0xFFFF)
            out += block
    out += struct.pack(">I", checksums.adler32(raw))
    return bytes(out)


def build(width: int, height: int, rgb: bytes) -> bytes:
    """Emit an 8-bit RGB PNG with stored-deflate IDAT data."""
    stride = width * 3
    raw = bytearray()
    for y in range(height):
        raw.append(0)  # filter: none
        row = rgb[y * stride:(y + 1) * stride]
        raw += row + b"\x00" * (stride - len(row))
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    idat = _stored_deflate(bytes(raw))
    out = SIGNATURE + make_chunk(b"IHDR", ihdr) + make_chunk(b"IDAT", idat) + make_chunk(b"IEND", b"")
    # The stored stream must stay agreeable to any inflate implementation.
    assert zlib.decompress(idat) == bytes(raw)
    return out
