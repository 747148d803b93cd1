"""PE structural validation.

Checks are deliberately shallow: "MZ" at offset zero (the format pins
its signature there, which is why PE must come first in any stack),
e_lfanew in range, "PE\\0\\0", a known machine field, section count
<= 96, and a section table that fits in the file.  The logical end is
the furthest extent of the headers and section raw data; anything after
it is the overlay.
"""

from __future__ import annotations

import struct

from pglot.formats.types import FormatId, InsertionPoint, ParseReport, PointKind

MAGIC = b"MZ"
PE_SIG = b"PE\x00\x00"

MACHINES = {0x014C: "i386", 0x0200: "ia64", 0x01C0: "arm", 0x01C4: "armnt",
            0xAA64: "arm64", 0x8664: "amd64"}
MAX_SECTIONS = 96
SECTION_SIZE = 40


def matches(data: bytes) -> bool:
    if len(data) < 0x40 or data[:2] != MAGIC:
        return False
    e_lfanew = struct.unpack_from("<I", data, 0x3C)[0]
    return data[e_lfanew:e_lfanew + 4] == PE_SIG


def parse(data: bytes) -> ParseReport:
    rep = ParseReport(FormatId.PE, valid=False)
    if len(data) < 0x40:
        rep.note("shorter than a DOS header")
        return rep
    if data[:2] != MAGIC:
        rep.note("missing MZ signature at offset zero")
        return rep
    e_lfanew = struct.unpack_from("<I", data, 0x3C)[0]
    if e_lfanew < 0x40 or e_lfanew + 24 > len(data):
        rep.note(f"e_lfanew {e_lfanew:#x} out of range")
        return rep
    if data[e_lfanew:e_lfanew + 4] != PE_SIG:
        rep.note("missing PE\\0\\0 signature")
        return rep
    machine, n_sections, _ts, _symoff, _nsyms, opt_size, _chars = struct.unpack_from(
        "<HHIIIHH", data, e_lfanew + 4
    )
    if machine not in MACHINES:
        rep.note(f"unknown machine field {machine:#06x}")
        return rep
    if n_sections == 0 or n_sections > MAX_SECTIONS:
        rep.note(f"section count {n_sections} out of range")
        return rep
    table = e_lfanew + 24 + opt_size
    table_end = table + n_sections * SECTION_SIZE
    if table_end > len(data):
        rep.note("section table extends past end of file")
        return rep
    logical_end = table_end
    for i in range(n_sections):
        off = table + i * SECTION_SIZE
        raw_size, raw_ptr = struct.unpack_from("<II", data, off + 16)
        if raw_ptr + raw_size > len(data):
            rep.note(f"section {i} raw data extends past end of file")
            return rep
        logical_end = max(logical_end, raw_ptr + raw_size)
    rep.valid = True
    rep.logical_end = logical_end
    return rep


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    # Overlay only; slack-space caves are not modeled.
    return [InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None)]
