"""RAR 4.x block walking with forward skip-scan location.

RAR readers scan forward, skipping extraneous content until the RAR
signature is found, which is why RAR data appended to another file
still opens.  Blocks after the 7-byte signature share a base header:

    u16 head_crc   low 16 bits of CRC-32 over the rest of the header
    u8  head_type  0x73 main, 0x74 file, 0x7B end-of-archive, ...
    u16 head_flags bit 0x8000: a u32 ADD_SIZE of trailing data follows
    u16 head_size

File blocks (0x74) carry their packed data size in the ADD_SIZE slot.
RAR5 ("Rar!\\x1a\\x07\\x01\\x00") is recognized by signature only.
"""

from __future__ import annotations

import struct

from pglot.formats import checksums
from pglot.formats.types import FormatId, InsertionPoint, ParseReport, PointKind

SIG4 = b"Rar!\x1a\x07\x00"
SIG5 = b"Rar!\x1a\x07\x01\x00"

MAIN_HEAD = 0x73
FILE_HEAD = 0x74
END_HEAD = 0x7B

LONG_BLOCK = 0x8000


def matches(data: bytes) -> bool:
    return data.startswith(SIG4) or data.startswith(SIG5)


def find_signature(data: bytes, start: int = 0) -> int:
    """Forward scan for a RAR signature; -1 when absent."""
    i4 = data.find(SIG4, start)
    i5 = data.find(SIG5, start)
    if i4 < 0:
        return i5
    if i5 < 0:
        return i4
    return min(i4, i5)


def parse_at(data: bytes, base: int) -> ParseReport:
    """Validate a RAR4 archive that starts at ``base``."""
    rep = ParseReport(FormatId.RAR, valid=False)
    if data[base:base + len(SIG5)] == SIG5:
        rep.note("RAR5 archive: signature recognized, blocks not parsed")
        return rep
    if data[base:base + len(SIG4)] != SIG4:
        rep.note("missing RAR signature")
        return rep
    n = len(data)
    pos = base + len(SIG4)
    saw_main = False
    saw_end = False
    while pos < n:
        if pos + 7 > n:
            rep.note(f"truncated block header at offset {pos}")
            return rep
        head_crc, head_type, head_flags, head_size = struct.unpack_from("<HBHH", data, pos)
        if head_size < 7 or pos + head_size > n:
            rep.note(f"block at offset {pos} has bad size {head_size}")
            return rep
        want = checksums.crc32(data[pos + 2:pos + head_size]) & 0xFFFF
        if want != head_crc:
            rep.note(f"bad header CRC in block type 0x{head_type:02X} at offset {pos}")
            return rep
        add_size = 0
        if head_flags & LONG_BLOCK:
            if head_size < 11:
                rep.note(f"block at offset {pos} too small for ADD_SIZE")
                return rep
            add_size = struct.unpack_from("<I", data, pos + 7)[0]
        if head_type == MAIN_HEAD:
            saw_main = True
        total = head_size + add_size
        if pos + total > n:
            rep.note(f"block data at offset {pos} extends past end of file")
            return rep
        pos += total
        if head_type == END_HEAD:
            saw_end = True
            break
    if not saw_main:
        rep.note("no main archive header")
        return rep
    if not saw_end:
        rep.note("no end-of-archive block")
        return rep
    rep.valid = True
    rep.logical_end = pos
    return rep


def parse(data: bytes) -> ParseReport:
    return parse_at(data, 0)


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    # No comment structure is modeled; appended data is simply skipped by
    # readers, so the overlay is the supported point.
    return [InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None)]


def _block(head_type: int, head_flags: int, body: bytes, tail: bytes = b"") -> bytes:
    head_size = 7 + len(body)
    rest = struct.pack("<BHH", head_type, head_flags, head_size) + body
    crc = checksums.crc32(rest) & 0xFFFF
    return struct.pack("<H", crc) + rest + tail


def build(entries: list[tuple[str, bytes]]) -> bytes:
    """Write a RAR4 archive with stored (method 0x30) entries.

    Enough structure for signature tools and block walkers; not meant to
    replace the proprietary archiver.
    """
    out = bytearray(SIG4)
    out += _block(MAIN_HEAD, 0, struct.pack("<HI", 0, 0))
    for name_s, content in entries:
        name = name_s.encode("utf-8")
        body = struct.pack(
            "<IIBIIBBHI",
            len(content),           # packed size (ADD_SIZE slot)
            len(content),           # unpacked size
            0,                       # host OS: MS-DOS
            checksums.crc32(content),
            0x2A210000,              # DOS timestamp
            20,                      # version to extract
            0x30,                    # method: store
            len(name),
            0x20,                    # file attributes
        ) + name
        out += _block(FILE_HEAD, LONG_BLOCK, body, tail=content)
    out += _block(END_HEAD, 0, b"")
    return bytes(out)
