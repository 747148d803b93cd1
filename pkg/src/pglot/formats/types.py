"""Core domain types for file-format handling."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class FormatId(enum.Enum):
    """The 12 supported formats plus UNKNOWN.

    UNKNOWN is the identification failure value; it never appears in a
    ground-truth label set.
    """

    BMP = "BMP"
    GIF = "GIF"
    JPEG = "JPEG"
    PNG = "PNG"
    ZIP = "ZIP"
    JAR = "JAR"
    RAR = "RAR"
    PE = "PE"
    HTA = "HTA"
    PHP = "PHP"
    JS = "JS"
    PS1 = "PS1"
    UNKNOWN = "UNKNOWN"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "FormatId":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown format name: {name!r}") from None

    @property
    def is_image(self) -> bool:
        return self in IMAGE_FORMATS

    @property
    def is_script(self) -> bool:
        return self in SCRIPT_FORMATS

    @property
    def is_archive(self) -> bool:
        return self in ARCHIVE_FORMATS


# Canonical ordering used for one-hot slots and multi-label output heads.
ALL_FORMATS: tuple[FormatId, ...] = (
    FormatId.BMP,
    FormatId.GIF,
    FormatId.JPEG,
    FormatId.PNG,
    FormatId.ZIP,
    FormatId.JAR,
    FormatId.RAR,
    FormatId.PE,
    FormatId.HTA,
    FormatId.PHP,
    FormatId.JS,
    FormatId.PS1,
)

IMAGE_FORMATS = frozenset({FormatId.BMP, FormatId.GIF, FormatId.JPEG, FormatId.PNG})
SCRIPT_FORMATS = frozenset({FormatId.HTA, FormatId.PHP, FormatId.JS, FormatId.PS1})
ARCHIVE_FORMATS = frozenset({FormatId.ZIP, FormatId.JAR, FormatId.RAR})

FORMAT_INDEX: dict[FormatId, int] = {f: i for i, f in enumerate(ALL_FORMATS)}


class PointKind(enum.Enum):
    """Where a payload can be placed relative to a host file's structure."""

    APPEND_AFTER_LOGICAL_END = "APPEND_AFTER_LOGICAL_END"
    COMMENT_SEGMENT = "COMMENT_SEGMENT"          # JPEG COM segments
    ANCILLARY_CHUNK = "ANCILLARY_CHUNK"          # PNG private ancillary chunk
    COMMENT_EXTENSION = "COMMENT_EXTENSION"      # GIF comment extension
    ARCHIVE_COMMENT = "ARCHIVE_COMMENT"          # ZIP end-of-central-directory comment
    PREPEND_TOLERATED = "PREPEND_TOLERATED"      # host tolerates data before its own start

    def __str__(self) -> str:
        return self.value


# Per-chunk payload capacities imposed by the carrying structures.
JPEG_COM_MAX = 65533       # 2-byte length includes itself
GIF_SUBBLOCK_MAX = 255
ZIP_COMMENT_MAX = 65535


@dataclass
class ParseReport:
    """Outcome of structural validation.

    ``logical_end`` is the exclusive offset of the last byte the format's
    own structure accounts for; anything beyond it is trailing data.  Only
    meaningful when ``valid`` is true.
    """

    format: FormatId
    valid: bool
    logical_end: int = 0
    notes: list[str] = field(default_factory=list)

    def note(self, msg: str) -> None:
        self.notes.append(msg)


@dataclass(frozen=True)
class InsertionPoint:
    """A location where a payload can legally be inserted.

    ``max_payload`` is the per-chunk capacity in bytes, or None when
    unbounded (appends).
    """

    kind: PointKind
    offset: int
    max_payload: int | None = None


@dataclass(frozen=True)
class CovertLocation:
    """Where a covert format instance lives inside a carrier file.

    For chunked parasites (GIF sub-blocks, multiple JPEG COM segments)
    ``start``/``length`` describe the first payload chunk; use
    ``registry.extract_covert`` to recover the full concatenated payload.
    """

    format: FormatId
    start: int
    length: int
    via: PointKind
