"""ZIP/JAR: tolerant reading, archive-comment handling, stored-mode writing.

ZIP archives are located from the end: scan backward for the
end-of-central-directory signature (within the last 65557 bytes plus
whatever comment follows it), read the central directory through the
recorded relative offsets, and honor a nonzero base offset when the
archive was appended to something else.  That base-offset tolerance is
exactly what makes image+ZIP stacks work in real unzip tools.

A JAR is a ZIP containing an entry named META-INF/MANIFEST.MF.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from pglot.formats import checksums
from pglot.formats.types import ZIP_COMMENT_MAX, FormatId, InsertionPoint, ParseReport, PointKind

LOCAL_SIG = b"PK\x03\x04"
CENTRAL_SIG = b"PK\x01\x02"
EOCD_SIG = b"PK\x05\x06"

EOCD_FIXED = 22
MANIFEST_NAME = b"META-INF/MANIFEST.MF"


@dataclass(frozen=True)
class Entry:
    name: bytes
    crc32: int
    size: int
    local_offset: int   # absolute, after base-offset correction
    data_offset: int    # absolute offset of stored data

    def data(self, buf: bytes) -> bytes:
        return buf[self.data_offset:self.data_offset + self.size]


@dataclass(frozen=True)
class Archive:
    start: int          # absolute offset of the first local header
    end: int            # absolute offset past EOCD + comment
    eocd_offset: int
    comment_offset: int
    comment: bytes
    entries: tuple[Entry, ...]

    @property
    def has_manifest(self) -> bool:
        return any(e.name == MANIFEST_NAME for e in self.entries)


def matches(data: bytes) -> bool:
    return data[:4] in (LOCAL_SIG, EOCD_SIG)


def find_archive(data: bytes) -> tuple[Archive | None, str | None]:
    """Locate and parse an archive the way tolerant readers do.

    Returns (archive, None) on success or (None, reason).  The archive
    may start anywhere; all offsets in the result are absolute.
    """
    n = len(data)
    if n < EOCD_FIXED:
        return None, "too small for an end-of-central-directory record"
    window_start = max(0, n - (EOCD_FIXED + ZIP_COMMENT_MAX))
    pos = data.rfind(EOCD_SIG, window_start)
    while pos >= 0:
        result = _parse_from_eocd(data, pos)
        if isinstance(result, Archive):
            return result, None
        # A false signature (e.g. inside the comment of the real EOCD, or
        # random bytes); keep scanning backward.
        prev = data.rfind(EOCD_SIG, window_start, pos)
        if prev == pos:
            break
        pos = prev
    return None, "no usable end-of-central-directory record"


def _parse_from_eocd(data: bytes, eocd: int) -> Archive | str:
    n = len(data)
    if eocd + EOCD_FIXED > n:
        return "truncated EOCD"
    (disk_no, cd_disk, n_disk, n_total, cd_size, cd_offset, comment_len) = struct.unpack_from(
        "<HHHHIIH", data, eocd + 4
    )
    if disk_no != 0 or cd_disk != 0 or n_disk != n_total:
        return "multi-disk archives unsupported"
    if eocd + EOCD_FIXED + comment_len > n:
        return "EOCD comment extends past end of file"
    # Base offset: where the archive actually begins, relative to which
    # all recorded offsets are interpreted.
    base = eocd - cd_size - cd_offset
    if base < 0:
        return "central directory does not fit before EOCD"
    cd_abs = base + cd_offset
    entries: list[Entry] = []
    pos = cd_abs
    for _ in range(n_total):
        if pos + 46 > n or data[pos:pos + 4] != CENTRAL_SIG:
            return f"bad central-directory entry at offset {pos}"
        (crc, csize, usize) = struct.unpack_from("<III", data, pos + 16)
        name_len, extra_len, comm_len = struct.unpack_from("<HHH", data, pos + 28)
        rel_local = struct.unpack_from("<I", data, pos + 42)[0]
        method = struct.unpack_from("<H", data, pos + 10)[0]
        name = data[pos + 46:pos + 46 + name_len]
        local_abs = base + rel_local
        if local_abs + 30 > n or data[local_abs:local_abs + 4] != LOCAL_SIG:
            return f"central entry {name!r} points at a bad local header"
        l_name, l_extra = struct.unpack_from("<HH", data, local_abs + 26)
        data_abs = local_abs + 30 + l_name + l_extra
        if method == 0 and data_abs + csize > n:
            return f"stored data for {name!r} extends past end of file"
        entries.append(Entry(name, crc, csize, local_abs, data_abs))
        pos += 46 + name_len + extra_len + comm_len
    if pos != cd_abs + cd_size:
        return "central directory size mismatch"
    start = min((e.local_offset for e in entries), default=base)
    end = eocd + EOCD_FIXED + comment_len
    comment = data[eocd + EOCD_FIXED:end]
    return Archive(start, end, eocd, eocd + EOCD_FIXED, comment, tuple(entries))


def parse(data: bytes, expect: FormatId = FormatId.ZIP) -> ParseReport:
    rep = ParseReport(expect, valid=False)
    arc, err = find_archive(data)
    if arc is None:
        rep.note(err or "no archive found")
        return rep
    if expect is FormatId.JAR and not arc.has_manifest:
        rep.note("no META-INF/MANIFEST.MF entry")
        return rep
    if arc.start > 0:
        rep.note(f"archive begins at offset {arc.start} (prepended data tolerated)")
    rep.valid = True
    rep.logical_end = arc.end
    return rep


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    arc, _ = find_archive(data)
    points = []
    if arc is not None:
        points.append(InsertionPoint(PointKind.ARCHIVE_COMMENT, arc.comment_offset, ZIP_COMMENT_MAX))
    points.append(InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None))
    return points


def set_comment(data: bytes, payload: bytes) -> tuple[bytes, int]:
    """Replace the EOCD comment with ``payload``; returns (bytes, offset)."""
    if len(payload) > ZIP_COMMENT_MAX:
        raise ValueError("comment exceeds 65535 bytes")
    arc, err = find_archive(data)
    if arc is None:
        raise ValueError(err or "not an archive")
    head = data[:arc.eocd_offset + EOCD_FIXED - 2]
    tail = data[arc.end:]
    out = head + struct.pack("<H", len(payload)) + payload + tail
    return out, arc.eocd_offset + EOCD_FIXED


def build(entries: list[tuple[str, bytes]], comment: bytes = b"") -> bytes:
    """Write a stored-mode (no compression) archive."""
    out = bytearray()
    centrals = bytearray()
    for name_s, content in entries:
        name = name_s.encode("utf-8")
        crc = checksums.crc32(content)
        local_off = len(out)
        out += LOCAL_SIG
        out += struct.pack("<HHHHHIIIHH", 20, 0, 0, 0, 0x21, crc, len(content), len(content), len(name), 0)
        out += name
        out += content
        centrals += CENTRAL_SIG
        centrals += struct.pack(
            "<HHHHHHIIIHHHHHII",
            20, 20, 0, 0, 0, 0x21, crc, len(content), len(content),
            len(name), 0, 0, 0, 0, 0, local_off,
        )
        centrals += name
    cd_offset = len(out)
    out += centrals
    out += EOCD_SIG
    out += struct.pack("<HHHHIIH", 0, 0, len(entries), len(entries), len(centrals), cd_offset, len(comment))
    out += comment
    return bytes(out)


def build_jar(entries: list[tuple[str, bytes]], manifest: bytes) -> bytes:
    return build([(MANIFEST_NAME.decode(), manifest)] + entries)
