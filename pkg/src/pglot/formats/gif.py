"""GIF parsing, comment-extension handling, and minimal emission.

Block structure after the header/logical-screen-descriptor:

    0x21 <label> <sub-blocks>   extension (comment label = 0xFE)
    0x2C <descriptor> <LZW>     image: 9-byte descriptor, optional local
                                color table, min-code-size byte, sub-blocks
    0x3B                        trailer

Sub-blocks are runs of (length byte, payload) ending with a 0x00 byte.
The LZW pixel stream is walked but not decoded.
"""

from __future__ import annotations

import struct

from pglot.formats.types import (
    GIF_SUBBLOCK_MAX,
    FormatId,
    InsertionPoint,
    ParseReport,
    PointKind,
)

MAGIC87 = b"GIF87a"
MAGIC89 = b"GIF89a"

COMMENT_LABEL = 0xFE
TRAILER = 0x3B


def matches(data: bytes) -> bool:
    return data.startswith(MAGIC87) or data.startswith(MAGIC89)


def _skip_subblocks(data: bytes, pos: int) -> int | None:
    """Return the offset one past the 0x00 terminator, or None if truncated."""
    n = len(data)
    while True:
        if pos >= n:
            return None
        size = data[pos]
        pos += 1
        if size == 0:
            return pos
        if pos + size > n:
            return None
        pos += size


def _color_table_size(packed: int) -> int:
    if packed & 0x80:
        return 3 * (2 << (packed & 0x07))
    return 0


def parse(data: bytes) -> ParseReport:
    rep = ParseReport(FormatId.GIF, valid=False)
    if not matches(data):
        rep.note("missing GIF87a/GIF89a signature")
        return rep
    if len(data) < 13:
        rep.note("truncated logical screen descriptor")
        return rep
    packed = data[10]
    pos = 13 + _color_table_size(packed)
    n = len(data)
    saw_image = False
    while True:
        if pos >= n:
            rep.note("ran off end of file before trailer")
            return rep
        block = data[pos]
        if block == TRAILER:
            pos += 1
            break
        if block == 0x21:  # extension
            if pos + 2 > n:
                rep.note("truncated extension introducer")
                return rep
            end = _skip_subblocks(data, pos + 2)
            if end is None:
                rep.note(f"truncated extension at offset {pos}")
                return rep
            pos = end
        elif block == 0x2C:  # image descriptor
            if pos + 10 > n:
                rep.note("truncated image descriptor")
                return rep
            pos += 10 + _color_table_size(data[pos + 9])
            if pos >= n:
                rep.note("truncated local color table")
                return rep
            pos += 1  # LZW minimum code size
            end = _skip_subblocks(data, pos)
            if end is None:
                rep.note("truncated LZW data stream")
                return rep
            pos = end
            saw_image = True
        else:
            rep.note(f"unknown block type 0x{block:02X} at offset {pos}")
            return rep
    if not saw_image:
        rep.note("no image descriptor before trailer")
        return rep
    rep.valid = True
    rep.logical_end = pos
    return rep


def _trailer_offset(data: bytes, report: ParseReport) -> int:
    return report.logical_end - 1


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    return [
        InsertionPoint(PointKind.COMMENT_EXTENSION, _trailer_offset(data, report), GIF_SUBBLOCK_MAX),
        InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None),
    ]


def comment_spans(data: bytes) -> list[list[tuple[int, int]]]:
    """Payload chunk spans of every comment extension, in file order.

    Each element is one comment extension's list of (offset, length)
    sub-block payload spans.
    """
    rep = parse(data)
    if not rep.valid:
        return []
    packed = data[10]
    pos = 13 + _color_table_size(packed)
    out: list[list[tuple[int, int]]] = []
    while data[pos] != TRAILER:
        block = data[pos]
        if block == 0x21:
            label = data[pos + 1]
            cur = pos + 2
            spans: list[tuple[int, int]] = []
            while data[cur] != 0:
                size = data[cur]
                spans.append((cur + 1, size))
                cur += 1 + size
            if label == COMMENT_LABEL:
                out.append(spans)
            pos = cur + 1
        else:  # image descriptor; structure already validated
            pos += 10 + _color_table_size(data[pos + 9]) + 1
            pos = _skip_subblocks(data, pos)  # type: ignore[assignment]
    return out


def make_comment_extension(payload: bytes) -> bytes:
    """Encode ``payload`` as a comment extension with 255-byte sub-blocks."""
    out = bytearray(b"\x21\xfe")
    for i in range(0, len(payload), GIF_SUBBLOCK_MAX):
        chunk = payload[i:i + GIF_SUBBLOCK_MAX]
        out.append(len(chunk))
        out += chunk
    out.append(0)
    return bytes(out)


def insert_comment(data: bytes, payload: bytes, report: ParseReport) -> tuple[bytes, int]:
    """Insert a comment extension right before the trailer.

    Returns (new bytes, absolute offset of the first payload byte).
    """
    at = _trailer_offset(data, report)
    ext = make_comment_extension(payload)
    return data[:at] + ext + data[at:], at + 3


def remove_comment(data: bytes, payload_start: int) -> bytes:
    """Remove the comment extension whose first payload byte is at ``payload_start``."""
    for spans in comment_spans(data):
        if spans and spans[0][0] == payload_start:
            ext_start = spans[0][0] - 3          # 0x21 0xFE <len>
            last_off, last_len = spans[-1]
            ext_end = last_off + last_len + 1    # past the 0x00 terminator
            return data[:ext_start] + data[ext_end:]
    raise ValueError(f"no comment payload at offset {payload_start}")


def lzw_encode_literals(pixels: bytes, min_code_size: int) -> bytes:
    """LZW-encode pixel indices using only literal codes.

    A clear code is re-emitted before the decoder's table would force a
    wider code, so the output stays at ``min_code_size + 1`` bits per
    code throughout.  Valid, if mildly inefficient.
    """
    clear = 1 << min_code_size
    eoi = clear + 1
    width = min_code_size + 1
    # Table slots clear+2 .. 2**width-1 are free before codes widen.
    per_run = (1 << width) - (clear + 2)
    bits = bytearray()
    acc = 0
    nbits = 0

    def emit(code: int) -> None:
        nonlocal acc, nbits
        acc |= code << nbits
        nbits += width
        while nbits >= 8:
            bits.append(acc & 0xFF)
            acc >>= 8
            nbits -= 8

    emit(clear)
    run = 0
    for p in pixels:
        if run == per_run:
            emit(clear)
            run = 0
        emit(p)
        run += 1
    emit(eoi)
    if nbits:
        bits.append(acc & 0xFF)
    return bytes(bits)


def build(width: int, height: int, pixels: bytes, palette: bytes) -> bytes:
    """Emit a single-frame GIF89a.

    ``palette`` is a global color table whose length is 3 * 2**k;
    ``pixels`` holds one index per pixel, each < len(palette) // 3.
    """
    ncolors = len(palette) // 3
    depth = max(1, (ncolors - 1).bit_length())
    if len(palette) != 3 * (1 << depth):
        raise ValueError("palette length must be 3 * 2**k")
    out = bytearray(MAGIC89)
    out += struct.pack("<HH", width, height)
    out.append(0x80 | ((depth - 1) & 0x07))  # GCT present, size field
    out += b"\x00\x00"
    out += palette
    out += b"\x2c" + struct.pack("<HHHH", 0, 0, width, height) + b"\x00"
    min_code_size = max(2, depth)
    out.append(min_code_size)
    stream = lzw_encode_literals(pixels[: width * height], min_code_size)
    for i in range(0, len(stream), GIF_SUBBLOCK_MAX):
        chunk = stream[i:i + GIF_SUBBLOCK_MAX]
        out.append(len(chunk))
        out += chunk
    out.append(0)
    out.append(TRAILER)
    return bytes(out)
