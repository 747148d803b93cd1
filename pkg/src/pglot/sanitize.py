"""Content disarmament and reconstruction for image files.

The sanitized file is rebuilt from a whitelist of format-essential
structures, copied byte-for-byte from the input (structural
reconstruction, never re-encoding), with everything else dropped:
comments, unknown chunks, non-essential extensions, and all trailing
data.  Whitelists:

* PNG  — IHDR, PLTE, tRNS, IDAT, IEND chunks (original order)
* JPEG — SOI, APP0, DQT, SOF*, DHT, SOS + entropy data, EOI
* GIF  — header, logical screen descriptor, global color table,
          image descriptors with their data, trailer
* BMP  — headers and the declared pixel extent

Because pixel/entropy data is copied verbatim, a payload hidden inside
a whitelisted structure would survive; none of the generated
combinations can place one there, and that residual risk is the cost
of never re-encoding (and of keeping the parsing surface minimal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from pglot.errors import InvalidImage, NotAnImage
from pglot.formats import FormatId, identify_first, locate_covert, validate
from pglot.formats import gif as giffmt
from pglot.formats import jpeg as jpegfmt
from pglot.formats import png as pngfmt
from pglot.scan import verdict

PNG_KEEP = {b"IHDR", b"PLTE", b"tRNS", b"IDAT", b"IEND"}
JPEG_KEEP_MARKERS = ({0xD8, 0xD9, 0xDA, 0xC4, 0xE0}
                     | {m for m in range(0xC0, 0xD0) if m not in (0xC4, 0xC8, 0xCC)}
                     | {0xDB})

COVERT_FORMATS = tuple(f for f in FormatId if f is not FormatId.UNKNOWN)


def whitelisted_structures(fmt: FormatId, data: bytes) -> list[bytes]:
    """The format-essential structures, as verbatim byte slices."""
    if fmt is FormatId.PNG:
        chunks, _ = pngfmt.iter_chunks(data)
        return [c.raw(data) for c in chunks if c.type in PNG_KEEP]
    if fmt is FormatId.JPEG:
        segs, _ = jpegfmt.iter_segments(data)
        out = []
        for i, s in enumerate(segs):
            if s.marker not in JPEG_KEEP_MARKERS:
                continue
            if s.marker == jpegfmt.SOS:
                # SOS owns its entropy-coded data (restart markers
                # included): copy through to the next segment boundary.
                nxt = segs[i + 1].offset if i + 1 < len(segs) else len(data)
                out.append(data[s.offset:nxt])
            else:
                out.append(data[s.offset:s.end])
        return out
    if fmt is FormatId.GIF:
        if not giffmt.parse(data).valid:
            raise InvalidImage("malformed GIF")
        head_end = 13 + (3 * (2 << (data[10] & 0x07)) if data[10] & 0x80 else 0)
        out = [data[:head_end]]
        pos = head_end
        while data[pos] != giffmt.TRAILER:
            if data[pos] == 0x21:
                cur = pos + 2
                while data[cur] != 0:
                    cur += 1 + data[cur]
                pos = cur + 1
            else:
                start = pos
                pos += 10 + (3 * (2 << (data[pos + 9] & 0x07)) if data[pos + 9] & 0x80 else 0)
                pos += 1
                while data[pos] != 0:
                    pos += 1 + data[pos]
                pos += 1
                out.append(data[start:pos])
        out.append(bytes([giffmt.TRAILER]))
        return out
    if fmt is FormatId.BMP:
        rep = validate(fmt, data)
        return [data[:rep.logical_end]]
    raise NotAnImage(f"{fmt} is not a supported image format")


def sanitize_image(data: bytes) -> bytes:
    """Rebuild the image from whitelisted structures only."""
    fmt = identify_first(data)
    if not fmt.is_image:
        raise NotAnImage(f"input identifies as {fmt}")
    rep = validate(fmt, data)
    if not rep.valid:
        raise InvalidImage("; ".join(rep.notes) or "structural validation failed")
    parts = whitelisted_structures(fmt, data)
    if fmt is FormatId.PNG:
        return pngfmt.SIGNATURE + b"".join(parts)
    return b"".join(parts)


@dataclass
class CleanReport:
    """Outcome of the four disarmament checks; failures are entries."""

    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_clean(original: bytes, sanitized: bytes) -> CleanReport:
    """Same-format validity, CLEAN scan, no locatable covert content,
    and byte-identical whitelisted structures vs the original."""
    report = CleanReport()
    fmt = identify_first(original)
    if identify_first(sanitized) is not fmt:
        report.failures.append("sanitized output identifies as a different format")
        return report
    rep = validate(fmt, sanitized)
    if not rep.valid:
        report.failures.append("sanitized output fails validation: " + "; ".join(rep.notes))
    if rep.valid and rep.logical_end != len(sanitized):
        report.failures.append("sanitized output has trailing data")
    v = verdict(sanitized)
    if not v.clean:
        rules = ", ".join(f.rule for f in v.findings if f.severity.value == "SUSPECT")
        report.failures.append(f"scanner verdict SUSPECT ({rules})")
    for covert in COVERT_FORMATS:
        if covert is fmt:
            continue
        if locate_covert(covert, sanitized) is not None:
            report.failures.append(f"covert {covert} still locatable")
    if whitelisted_structures(fmt, original) != whitelisted_structures(fmt, sanitized):
        report.failures.append("whitelisted structures differ from the original")
    return report
