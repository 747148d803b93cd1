"""Format identification, validation, and covert-payload location."""

from pglot.formats.checksums import adler32, crc32
from pglot.formats.registry import (
    PayloadRegion,
    comment_regions,
    extract_covert,
    identify_first,
    insertion_points,
    locate_covert,
    recover_labels,
    validate,
)
from pglot.formats.types import (
    ALL_FORMATS,
    ARCHIVE_FORMATS,
    FORMAT_INDEX,
    IMAGE_FORMATS,
    SCRIPT_FORMATS,
    CovertLocation,
    FormatId,
    InsertionPoint,
    ParseReport,
    PointKind,
)

__all__ = [
    "ALL_FORMATS",
    "ARCHIVE_FORMATS",
    "FORMAT_INDEX",
    "IMAGE_FORMATS",
    "SCRIPT_FORMATS",
    "CovertLocation",
    "FormatId",
    "InsertionPoint",
    "ParseReport",
    "PayloadRegion",
    "PointKind",
    "adler32",
    "comment_regions",
    "crc32",
    "extract_covert",
    "identify_first",
    "insertion_points",
    "locate_covert",
    "recover_labels",
    "validate",
]
