"""Structural rule scanning of images for extraneous content.

Two rule families, both parse-driven rather than regex-over-raw-bytes
(raw signatures misfire inside entropy-coded pixel data):

* trailing data — anything past the image's logical end is flagged,
  with the suspected format determined by running the tolerant
  locators over the tail;
* parasites — every comment-type payload (JPEG COM, PNG unknown
  ancillary chunks, GIF comment extensions) is extracted and flagged
  as suspect when it contains script opening tokens or an embedded
  archive/executable signature, informational otherwise.

Only image files are in scope; other formats get an informational
"not an image" finding and a CLEAN verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from pglot.formats import (
    SCRIPT_FORMATS,
    FormatId,
    comment_regions,
    identify_first,
    locate_covert,
    validate,
)
from pglot.formats import bmp, gif, jpeg, pe, png, rar, scripts, zipar


class Severity(enum.Enum):
    INFO = "INFO"
    SUSPECT = "SUSPECT"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Finding:
    rule: str
    offset: int
    length: int
    suspected: FormatId | None = None
    severity: Severity = Severity.SUSPECT


@dataclass(frozen=True)
class Verdict:
    clean: bool
    findings: tuple[Finding, ...]

    @property
    def label(self) -> str:
        return "CLEAN" if self.clean else "SUSPECT"


_SCRIPT_ORDER = (FormatId.PHP, FormatId.HTA, FormatId.PS1, FormatId.JS)


def _suspect_format(payload: bytes) -> FormatId | None:
    """Which format a standalone blob of extraneous bytes looks like."""
    for fmt, module in ((FormatId.PE, pe), (FormatId.PNG, png), (FormatId.GIF, gif),
                        (FormatId.JPEG, jpeg), (FormatId.BMP, bmp)):
        if module.matches(payload):
            return fmt
    if rar.find_signature(payload) >= 0:
        return FormatId.RAR
    arc, _ = zipar.find_archive(payload)
    if arc is not None:
        return FormatId.JAR if arc.has_manifest else FormatId.ZIP
    for fmt in _SCRIPT_ORDER:
        if scripts.script_matches(fmt, payload):
            return fmt
    return None


def _not_an_image(data: bytes) -> list[Finding] | None:
    first = identify_first(data)
    if first.is_image:
        return None
    return [Finding("not-an-image", 0, 0, None, Severity.INFO)]


def scan_trailing(data: bytes) -> list[Finding]:
    """Flag data past the image's logical end."""
    skip = _not_an_image(data)
    if skip is not None:
        return skip
    first = identify_first(data)
    rep = validate(first, data)
    if not rep.valid:
        return [Finding("invalid-image", 0, 0, None, Severity.INFO)]
    if rep.logical_end >= len(data):
        return []
    tail = data[rep.logical_end:]
    return [Finding("trailing-data", rep.logical_end, len(tail),
                    _suspect_format(tail), Severity.SUSPECT)]


# Archive/executable signatures worth flagging inside a comment payload.
_EMBED_SIGS = (zipar.LOCAL_SIG, zipar.EOCD_SIG, rar.SIG4, rar.SIG5)


def scan_parasites(data: bytes) -> list[Finding]:
    """Classify every comment-type payload of an image."""
    skip = _not_an_image(data)
    if skip is not None:
        return skip
    findings = []
    for region in comment_regions(data):
        payload = region.concat(data)
        offset, length = region.chunks[0][0], sum(n for _, n in region.chunks)
        suspected = None
        suspect = False
        for fmt in _SCRIPT_ORDER:
            if scripts.script_matches(fmt, payload):
                suspected = fmt
                suspect = True
                break
        if not suspect and any(sig in payload for sig in _EMBED_SIGS):
            suspect = True
            suspected = _suspect_format(payload)
        name = region.kind.value.lower().replace("_", "-")
        if suspect:
            findings.append(Finding(f"parasite-{name}", offset, length,
                                    suspected, Severity.SUSPECT))
        else:
            findings.append(Finding(f"comment-{name}", offset, length,
                                    None, Severity.INFO))
    return findings


def verdict(data: bytes) -> Verdict:
    """SUSPECT iff any rule produced a SUSPECT finding."""
    findings = tuple(scan_trailing(data)) + tuple(
        f for f in scan_parasites(data) if f.rule != "not-an-image"
    )
    clean = all(f.severity is not Severity.SUSPECT for f in findings)
    return Verdict(clean, findings)
