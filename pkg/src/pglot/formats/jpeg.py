"""JPEG segment walking and COM-parasite handling.

Segments are 0xFF <marker> followed (for most markers) by a big-endian
u16 length that includes the length field itself.  After SOS the
entropy-coded stream runs until a marker other than a stuffed 0xFF00 or
a restart marker; the walk resumes there (progressive files have
several scans).  The logical end is one past the EOI marker found at
segment level, so 0xFFD9-looking bytes inside entropy data are never
misread as the end of image.
"""

from __future__ import annotations

from dataclasses import dataclass

from pglot.formats.types import JPEG_COM_MAX, FormatId, InsertionPoint, ParseReport, PointKind

SOI = 0xD8
EOI = 0xD9
SOS = 0xDA
COM = 0xFE
APP0 = 0xE0

_STANDALONE = {0x01} | set(range(0xD0, 0xD8))  # TEM, RST0-7


@dataclass(frozen=True)
class Segment:
    marker: int
    offset: int       # of the 0xFF byte
    data_offset: int  # first payload byte (past the length field)
    data_length: int

    @property
    def end(self) -> int:
        return self.data_offset + self.data_length


def matches(data: bytes) -> bool:
    return data[:3] == b"\xff\xd8\xff"


def _scan_entropy(data: bytes, pos: int) -> tuple[int, int | None]:
    """Skip entropy-coded data; returns (offset of next marker's 0xFF, marker)."""
    n = len(data)
    while pos + 1 < n:
        if data[pos] != 0xFF:
            pos += 1
            continue
        nxt = data[pos + 1]
        if nxt == 0x00 or 0xD0 <= nxt <= 0xD7:  # stuffing / restart
            pos += 2
            continue
        if nxt == 0xFF:  # fill byte
            pos += 1
            continue
        return pos, nxt
    return n, None


def iter_segments(data: bytes) -> tuple[list[Segment], str | None]:
    """Walk segments through EOI; returns (segments, error or None)."""
    segs: list[Segment] = []
    n = len(data)
    if n < 2 or data[0] != 0xFF or data[1] != SOI:
        return segs, "missing SOI marker"
    segs.append(Segment(SOI, 0, 2, 0))
    pos = 2
    while True:
        if pos + 2 > n:
            return segs, f"ran out of data at offset {pos} before EOI"
        if data[pos] != 0xFF:
            return segs, f"expected marker at offset {pos}"
        marker = data[pos + 1]
        if marker == 0xFF:  # fill
            pos += 1
            continue
        if marker == EOI:
            segs.append(Segment(EOI, pos, pos + 2, 0))
            return segs, None
        if marker in _STANDALONE:
            segs.append(Segment(marker, pos, pos + 2, 0))
            pos += 2
            continue
        if pos + 4 > n:
            return segs, f"truncated segment length at offset {pos}"
        length = (data[pos + 2] << 8) | data[pos + 3]
        if length < 2 or pos + 2 + length > n:
            return segs, f"segment 0xFF{marker:02X} at offset {pos} has bad length {length}"
        segs.append(Segment(marker, pos, pos + 4, length - 2))
        pos += 2 + length
        if marker == SOS:
            pos, nxt = _scan_entropy(data, pos)
            if nxt is None:
                return segs, "entropy stream never reached a terminating marker"


def parse(data: bytes) -> ParseReport:
    rep = ParseReport(FormatId.JPEG, valid=False)
    if not matches(data):
        rep.note("missing SOI signature")
        return rep
    segs, err = iter_segments(data)
    if err is not None:
        rep.note(err)
        return rep
    markers = {s.marker for s in segs}
    if SOS not in markers:
        rep.note("no SOS segment")
        return rep
    rep.valid = True
    rep.logical_end = segs[-1].end
    return rep


def _com_insert_offset(segs: list[Segment]) -> int:
    # Right after the APP0/JFIF segment when present, else after SOI.
    for s in segs:
        if s.marker == APP0:
            return s.end
    return 2


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    segs, _ = iter_segments(data)
    return [
        InsertionPoint(PointKind.COMMENT_SEGMENT, _com_insert_offset(segs), JPEG_COM_MAX),
        InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None),
    ]


def com_spans(data: bytes) -> list[tuple[int, int]]:
    """(payload offset, length) of every COM segment, in file order."""
    segs, _ = iter_segments(data)
    return [(s.data_offset, s.data_length) for s in segs if s.marker == COM]


def make_com_run(payload: bytes) -> bytes:
    """Encode a payload as one or more consecutive COM segments."""
    out = bytearray()
    for i in range(0, len(payload), JPEG_COM_MAX):
        chunk = payload[i:i + JPEG_COM_MAX]
        out += b"\xff\xfe"
        out += (len(chunk) + 2).to_bytes(2, "big")
        out += chunk
    return bytes(out)


def insert_comment(data: bytes, payload: bytes) -> tuple[bytes, int]:
    """Insert COM segment(s) after APP0; returns (bytes, payload offset)."""
    segs, err = iter_segments(data)
    if err is not None:
        raise ValueError("not a structurally sound JPEG")
    at = _com_insert_offset(segs)
    run = make_com_run(payload)
    return data[:at] + run + data[at:], at + 4


def remove_comment_run(data: bytes, payload_start: int) -> bytes:
    """Remove the run of consecutive COM segments starting at ``payload_start``."""
    segs, err = iter_segments(data)
    if err is not None:
        raise ValueError("not a structurally sound JPEG")
    coms = [s for s in segs if s.marker == COM]
    run: list[Segment] = []
    for s in coms:
        if not run:
            if s.data_offset == payload_start:
                run.append(s)
        elif s.offset == run[-1].end:
            run.append(s)
        else:
            break
    if not run:
        raise ValueError(f"no COM payload at offset {payload_start}")
    return data[:run[0].offset] + data[run[-1].end:]
