"""BMP parsing and minimal emission.

Layout handled here (BITMAPINFOHEADER only):

    offset 0   "BM"
    offset 2   u32 declared file size
    offset 6   u32 reserved
    offset 10  u32 pixel data offset
    offset 14  u32 DIB header size (40)
    ...        width/height/planes/bpp/compression/image size

The logical end is the declared file size when it covers the pixel
extent, else the end of the pixel array.  Trailing data beyond that is
tolerated (and is exactly how BMP stack polyglots are built).
"""

from __future__ import annotations

import struct

from pglot.formats.types import FormatId, InsertionPoint, ParseReport, PointKind

MAGIC = b"BM"
_DIB_SIZES = {12, 40, 52, 56, 64, 108, 124}


def matches(data: bytes) -> bool:
    if len(data) < 54 or data[:2] != MAGIC:
        return False
    dib_size = struct.unpack_from("<I", data, 14)[0]
    return dib_size in _DIB_SIZES


def _row_size(width: int, bpp: int) -> int:
    return ((width * bpp + 31) // 32) * 4


def parse(data: bytes) -> ParseReport:
    rep = ParseReport(FormatId.BMP, valid=False)
    if len(data) < 54:
        rep.note("shorter than minimal BMP headers")
        return rep
    if data[:2] != MAGIC:
        rep.note("missing BM signature")
        return rep
    file_size, _, pixel_offset = struct.unpack_from("<III", data, 2)
    dib_size, width, height = struct.unpack_from("<Iii", data, 14)
    if dib_size not in _DIB_SIZES:
        rep.note(f"unrecognized DIB header size {dib_size}")
        return rep
    if dib_size < 40:
        rep.note("core-header BMP not supported")
        return rep
    planes, bpp, compression, image_size = struct.unpack_from("<HHII", data, 26)
    if planes != 1:
        rep.note(f"planes={planes}, expected 1")
        return rep
    if width <= 0 or height == 0:
        rep.note(f"implausible dimensions {width}x{height}")
        return rep
    if compression == 0 or image_size == 0:
        image_size = _row_size(width, bpp) * abs(height)
    if pixel_offset < 14 + dib_size:
        rep.note("pixel data offset inside headers")
        return rep
    pixel_end = pixel_offset + image_size
    if pixel_end > len(data):
        rep.note(f"pixel array extends past end of file ({pixel_end} > {len(data)})")
        return rep
    rep.valid = True
    if pixel_end <= file_size <= len(data):
        rep.logical_end = file_size
    else:
        rep.logical_end = pixel_end
        if file_size != pixel_end:
            rep.note(f"declared size {file_size} inconsistent, using pixel extent")
    return rep


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    # BMP has no comment structure; stack-append is the only supported point.
    return [InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None)]


def build(width: int, height: int, pixels: bytes) -> bytes:
    """Emit a 24-bit uncompressed BMP; ``pixels`` supplies raw BGR bytes."""
    row = _row_size(width, 24)
    need = row * height
    if len(pixels) < need:
        pixels = (pixels * (need // max(1, len(pixels)) + 1))[:need]
    body = bytearray()
    stride = width * 3
    for y in range(height):
        line = pixels[y * stride:(y + 1) * stride]
        body += line + b"\x00" * (row - len(line))
    pixel_offset = 54
    file_size = pixel_offset + len(body)
    header = struct.pack("<2sIHHI", MAGIC, file_size, 0, 0, pixel_offset)
    dib = struct.pack("<IiiHHIIiiII", 40, width, height, 1, 24, 0, len(body), 2835, 2835, 0, 0)
    return bytes(header + dib + body)
