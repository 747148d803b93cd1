"""Format identification, validation dispatch, and covert-payload location.

``identify_first`` reports the first format whose magic/structural check
matches at offset zero, in a fixed precedence order: unambiguous binary
magics first (PE, PNG, GIF, JPEG, BMP, RAR, then ZIP with the JAR
refinement), token-heuristic script formats last (PHP, HTA, PS1, JS).

``locate_covert`` emulates each format's tolerant reader:

* ZIP/JAR — backward scan for the end-of-central-directory record,
  honoring a nonzero base offset; located as covert only when the
  archive starts past offset zero.
* RAR — forward skip-scan for the signature; covert only past zero.
* scripts — token scan inside comment-type payloads of the hosting
  format and in the tail after its logical end.
* images and PE — their magic must sit at offset zero, so they are
  covert only as a tolerated prefix (trailing data present).
"""

from __future__ import annotations

from dataclasses import dataclass

from pglot.errors import PglotError
from pglot.formats import bmp, gif, jpeg, pe, png, rar, scripts, zipar
from pglot.formats.types import (
    ALL_FORMATS,
    IMAGE_FORMATS,
    SCRIPT_FORMATS,
    CovertLocation,
    FormatId,
    InsertionPoint,
    ParseReport,
    PointKind,
)

_BINARY_MODULES = {
    FormatId.BMP: bmp,
    FormatId.GIF: gif,
    FormatId.JPEG: jpeg,
    FormatId.PNG: png,
    FormatId.ZIP: zipar,
    FormatId.JAR: zipar,
    FormatId.RAR: rar,
    FormatId.PE: pe,
}

# Identification precedence: binary magics are unambiguous, script token
# heuristics are not, so binaries always win.
MAGIC_ORDER = (FormatId.PE, FormatId.PNG, FormatId.GIF, FormatId.JPEG,
               FormatId.BMP, FormatId.RAR, FormatId.ZIP)
SCRIPT_ORDER = (FormatId.PHP, FormatId.HTA, FormatId.PS1, FormatId.JS)


def identify_first(data: bytes) -> FormatId:
    """First format matching at offset zero, or UNKNOWN."""
    for fmt in MAGIC_ORDER:
        if not _BINARY_MODULES[fmt].matches(data):
            continue
        if fmt is FormatId.ZIP:
            arc, _ = zipar.find_archive(data)
            if arc is not None and arc.has_manifest:
                return FormatId.JAR
        return fmt
    for fmt in SCRIPT_ORDER:
        if scripts.script_matches(fmt, data):
            return fmt
    return FormatId.UNKNOWN


def validate(fmt: FormatId, data: bytes) -> ParseReport:
    """Structural validation; never raises on malformed input."""
    if fmt is FormatId.UNKNOWN:
        raise ValueError("cannot validate UNKNOWN")
    if fmt in SCRIPT_FORMATS:
        return scripts.parse(fmt, data)
    if fmt in (FormatId.ZIP, FormatId.JAR):
        return zipar.parse(data, expect=fmt)
    return _BINARY_MODULES[fmt].parse(data)


def insertion_points(fmt: FormatId, data: bytes) -> list[InsertionPoint]:
    """Every supported parasite point plus the post-logical-end append."""
    report = validate(fmt, data)
    if not report.valid:
        raise ValueError(f"insertion_points requires a valid {fmt} file")
    if fmt in SCRIPT_FORMATS:
        return scripts.insertion_points(data, report)
    return _BINARY_MODULES[fmt].insertion_points(data, report)


@dataclass(frozen=True)
class PayloadRegion:
    """One comment-type payload: ordered (offset, length) chunk spans."""

    kind: PointKind
    chunks: tuple[tuple[int, int], ...]

    def concat(self, data: bytes) -> bytes:
        return b"".join(data[o:o + n] for o, n in self.chunks)


def comment_regions(data: bytes) -> list[PayloadRegion]:
    """Comment-type payload regions of the file's first format."""
    first = identify_first(data)
    regions: list[PayloadRegion] = []
    if first is FormatId.JPEG:
        for off, ln in jpeg.com_spans(data):
            regions.append(PayloadRegion(PointKind.COMMENT_SEGMENT, ((off, ln),)))
    elif first is FormatId.PNG:
        for off, ln, _t in png.unknown_chunk_spans(data):
            regions.append(PayloadRegion(PointKind.ANCILLARY_CHUNK, ((off, ln),)))
    elif first is FormatId.GIF:
        for spans in gif.comment_spans(data):
            regions.append(PayloadRegion(PointKind.COMMENT_EXTENSION, tuple(spans)))
    elif first in (FormatId.ZIP, FormatId.JAR):
        arc, _ = zipar.find_archive(data)
        if arc is not None and arc.comment:
            regions.append(PayloadRegion(
                PointKind.ARCHIVE_COMMENT, ((arc.comment_offset, len(arc.comment)),)
            ))
    return regions


def _tail_region(data: bytes) -> tuple[int, int] | None:
    """(start, length) of trailing data past the first format's logical end."""
    first = identify_first(data)
    if first is FormatId.UNKNOWN or first in SCRIPT_FORMATS:
        return None
    rep = validate(first, data)
    if not rep.valid or rep.logical_end >= len(data):
        return None
    return rep.logical_end, len(data) - rep.logical_end


def _merge_com_runs(data: bytes, regions: list[PayloadRegion]) -> list[PayloadRegion]:
    """Fuse consecutive JPEG COM segments into one logical region.

    A payload larger than one segment's capacity is emitted as a run of
    back-to-back COM segments; readers recover it by concatenation.
    """
    out: list[PayloadRegion] = []
    for reg in regions:
        if (
            reg.kind is PointKind.COMMENT_SEGMENT
            and out
            and out[-1].kind is PointKind.COMMENT_SEGMENT
        ):
            last_off, last_len = out[-1].chunks[-1]
            # The next COM's 0xFFFE + length field starts right after.
            if reg.chunks[0][0] == last_off + last_len + 4:
                out[-1] = PayloadRegion(reg.kind, out[-1].chunks + reg.chunks)
                continue
        out.append(reg)
    return out


def locate_covert(fmt: FormatId, data: bytes) -> CovertLocation | None:
    """Find a covert instance of ``fmt`` the way its tolerant reader would."""
    if fmt is FormatId.UNKNOWN:
        raise ValueError("cannot locate UNKNOWN")

    if fmt in (FormatId.ZIP, FormatId.JAR):
        arc, _ = zipar.find_archive(data)
        if arc is None or arc.start == 0:
            return None
        if fmt is FormatId.JAR and not arc.has_manifest:
            return None
        return CovertLocation(fmt, arc.start, arc.end - arc.start,
                              PointKind.APPEND_AFTER_LOGICAL_END)

    if fmt is FormatId.RAR:
        start = 0
        while True:
            sig = rar.find_signature(data, start)
            if sig <= 0:
                return None
            rep = rar.parse_at(data, sig)
            if rep.valid:
                return CovertLocation(fmt, sig, rep.logical_end - sig,
                                      PointKind.APPEND_AFTER_LOGICAL_END)
            start = sig + 1

    if fmt in IMAGE_FORMATS or fmt is FormatId.PE:
        rep = validate(fmt, data)
        if rep.valid and rep.logical_end < len(data):
            return CovertLocation(fmt, 0, rep.logical_end, PointKind.PREPEND_TOLERATED)
        return None

    # Scripts: comment payloads first (file order), then the tail.
    regions = _merge_com_runs(data, comment_regions(data))
    for reg in regions:
        payload = reg.concat(data)
        if scripts.script_matches(fmt, payload):
            off, ln = reg.chunks[0]
            return CovertLocation(fmt, off, ln, reg.kind)
    tail = _tail_region(data)
    if tail is not None:
        start, length = tail
        if scripts.script_matches(fmt, data[start:start + length]):
            return CovertLocation(fmt, start, length, PointKind.APPEND_AFTER_LOGICAL_END)
    return None


def extract_covert(data: bytes, loc: CovertLocation) -> bytes:
    """Recover the full covert payload a location refers to."""
    if loc.via in (PointKind.APPEND_AFTER_LOGICAL_END, PointKind.PREPEND_TOLERATED):
        return data[loc.start:loc.start + loc.length]
    for reg in _merge_com_runs(data, comment_regions(data)):
        if reg.chunks and reg.chunks[0][0] == loc.start and reg.kind is loc.via:
            return reg.concat(data)
    raise PglotError(f"no {loc.via} payload region at offset {loc.start}")


def recover_labels(data: bytes) -> set[FormatId]:
    """Ground-truth label recovery: first format plus located coverts.

    A located JAR suppresses the ZIP label for the same archive (JAR is
    a ZIP by containment; the more specific label wins).
    """
    labels: set[FormatId] = set()
    first = identify_first(data)
    if first is not FormatId.UNKNOWN and validate(first, data).valid:
        labels.add(first)
    for fmt in ALL_FORMATS:
        if fmt is first:
            continue
        if fmt is FormatId.ZIP and (first is FormatId.JAR or FormatId.JAR in labels):
            continue
        if locate_covert(fmt, data) is not None:
            labels.add(fmt)
    if FormatId.JAR in labels:
        labels.discard(FormatId.ZIP)
    return labels
