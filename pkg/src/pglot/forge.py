"""Polyglot generation over the observed-in-the-wild combination matrix.

Two combination methods are generated:

* stack — one file appended after the other.  The format that pins its
  magic to offset zero (an image, or PE) goes first; the format whose
  reader tolerates a nonzero start (archive back-read/skip-scan, script
  skip-scan) is appended.
* parasite — the covert file placed inside a comment-type structure of
  the overt file (JPEG COM run, PNG ancillary chunk, GIF comment
  extension, ZIP archive comment).

Zipper and cavity combinations are defined in the taxonomy but not
generated here; suitable format pairs are rare and none of the modeled
abuse used them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from pglot.errors import DonorInvalid, IllegalRecipe, PayloadTooLarge, PglotError
from pglot.formats import (
    CovertLocation,
    FormatId,
    PointKind,
    extract_covert,
    gif,
    jpeg,
    locate_covert,
    png,
    validate,
    zipar,
)
from pglot.formats.types import ZIP_COMMENT_MAX


class Method(enum.Enum):
    STACK = "STACK"
    PARASITE = "PARASITE"

    def __str__(self) -> str:
        return self.value


S = frozenset({Method.STACK})
P = frozenset({Method.PARASITE})
SP = S | P

# covert -> {overt -> allowed methods}.  Restricted to the 12 in-scope
# formats; script-over-archive keeps the archive's own end-scan semantics
# (ZIP archive-comment parasite, RAR append).
_MATRIX: dict[FormatId, dict[FormatId, frozenset[Method]]] = {
    FormatId.HTA: {
        FormatId.JPEG: SP, FormatId.PNG: SP, FormatId.BMP: S, FormatId.GIF: SP,
        FormatId.PE: S, FormatId.RAR: S, FormatId.ZIP: P,
    },
    FormatId.PHP: {
        FormatId.JPEG: SP, FormatId.PNG: SP, FormatId.BMP: S, FormatId.GIF: SP,
        FormatId.RAR: S, FormatId.ZIP: P,
    },
    FormatId.JS: {FormatId.GIF: SP, FormatId.BMP: S},
    FormatId.PS1: {FormatId.JPEG: SP, FormatId.BMP: S, FormatId.GIF: SP},
    FormatId.ZIP: {FormatId.JPEG: S, FormatId.PNG: S, FormatId.GIF: S},
    FormatId.JAR: {FormatId.JPEG: S, FormatId.PNG: S, FormatId.GIF: S},
    FormatId.RAR: {FormatId.JPEG: S, FormatId.PNG: S, FormatId.BMP: S, FormatId.GIF: S},
    FormatId.BMP: {FormatId.ZIP: S, FormatId.JAR: S},
}

# Formats whose magic must sit at offset zero; in a stack they go first.
_OFFSET_ZERO = frozenset({FormatId.BMP, FormatId.GIF, FormatId.JPEG, FormatId.PNG, FormatId.PE})

_PARASITE_POINT = {
    FormatId.JPEG: PointKind.COMMENT_SEGMENT,
    FormatId.PNG: PointKind.ANCILLARY_CHUNK,
    FormatId.GIF: PointKind.COMMENT_EXTENSION,
    FormatId.ZIP: PointKind.ARCHIVE_COMMENT,
}


def combination_matrix() -> dict[tuple[FormatId, FormatId], frozenset[Method]]:
    """The legal (covert, overt) pairs and their allowed methods."""
    return {(c, o): m for c, row in _MATRIX.items() for o, m in row.items()}


def matrix_text() -> str:
    """Canonical serialization of the matrix, for hashing into manifests."""
    lines = []
    for (c, o), methods in sorted(combination_matrix().items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        names = "+".join(sorted(m.value for m in methods))
        lines.append(f"{c}->{o}:{names}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Recipe:
    """One polyglot construction: what goes into what, and how."""

    covert: FormatId
    overt: FormatId
    method: Method
    point: PointKind | None = None   # None: the overt format's default point
    seed: int = 0

    def resolved_point(self) -> PointKind:
        if self.method is Method.STACK:
            if self.covert in _OFFSET_ZERO:
                return PointKind.PREPEND_TOLERATED
            return PointKind.APPEND_AFTER_LOGICAL_END
        return self.point or _PARASITE_POINT[self.overt]


@dataclass(frozen=True)
class ForgeResult:
    bytes: bytes
    recipe: Recipe
    covert_location: CovertLocation


def _check_legal(recipe: Recipe) -> None:
    methods = combination_matrix().get((recipe.covert, recipe.overt))
    if methods is None:
        raise IllegalRecipe(f"pair ({recipe.covert}, {recipe.overt}) is not in the matrix")
    if recipe.method not in methods:
        raise IllegalRecipe(
            f"method {recipe.method} not allowed for ({recipe.covert}, {recipe.overt})"
        )
    if recipe.method is Method.PARASITE:
        want = _PARASITE_POINT[recipe.overt]
        if recipe.point is not None and recipe.point is not want:
            raise IllegalRecipe(f"{recipe.overt} parasites use {want}, not {recipe.point}")


def forge(recipe: Recipe, covert_bytes: bytes, overt_bytes: bytes) -> ForgeResult:
    """Combine two donors per the recipe; the result satisfies both readers."""
    _check_legal(recipe)
    if not validate(recipe.covert, covert_bytes).valid:
        raise DonorInvalid(f"covert donor does not validate as {recipe.covert}")
    overt_rep = validate(recipe.overt, overt_bytes)
    if not overt_rep.valid:
        raise DonorInvalid(f"overt donor does not validate as {recipe.overt}")

    if recipe.method is Method.STACK:
        if recipe.covert in _OFFSET_ZERO:
            out = covert_bytes + overt_bytes
        else:
            out = overt_bytes + covert_bytes
    else:
        point = recipe.resolved_point()
        if point is PointKind.COMMENT_SEGMENT:
            out, _ = jpeg.insert_comment(overt_bytes, covert_bytes)
        elif point is PointKind.ANCILLARY_CHUNK:
            out, _ = png.insert_parasite_chunk(overt_bytes, covert_bytes)
        elif point is PointKind.COMMENT_EXTENSION:
            out, _ = gif.insert_comment(overt_bytes, covert_bytes, overt_rep)
        elif point is PointKind.ARCHIVE_COMMENT:
            if len(covert_bytes) > ZIP_COMMENT_MAX:
                raise PayloadTooLarge(
                    f"archive comment holds at most {ZIP_COMMENT_MAX} bytes, "
                    f"payload is {len(covert_bytes)}"
                )
            out, _ = zipar.set_comment(overt_bytes, covert_bytes)
        else:  # pragma: no cover - matrix guarantees a comment point
            raise IllegalRecipe(f"no parasite point for {recipe.overt}")

    loc = locate_covert(recipe.covert, out)
    if loc is None:
        raise PglotError(f"forged output does not expose covert {recipe.covert}")
    return ForgeResult(out, recipe, loc)


def extract_payload(result_bytes: bytes, loc: CovertLocation) -> bytes:
    """The covert donor as recoverable from the polyglot alone."""
    return extract_covert(result_bytes, loc)


def strip_covert(data: bytes, loc: CovertLocation) -> bytes:
    """Inverse of forge: remove the covert payload, returning the overt donor.

    For stacks this slices the carrier out; for parasites it removes the
    whole carrying structure (COM run, chunk, comment extension, archive
    comment) so the result is byte-identical to the original overt donor.
    """
    if loc.via is PointKind.APPEND_AFTER_LOGICAL_END:
        return data[:loc.start] + data[loc.start + loc.length:]
    if loc.via is PointKind.PREPEND_TOLERATED:
        return data[loc.start + loc.length:]
    if loc.via is PointKind.ANCILLARY_CHUNK:
        return data[:loc.start - 8] + data[loc.start + loc.length + 4:]
    if loc.via is PointKind.ARCHIVE_COMMENT:
        out, _ = zipar.set_comment(data, b"")
        return out
    if loc.via is PointKind.COMMENT_SEGMENT:
        return jpeg.remove_comment_run(data, loc.start)
    if loc.via is PointKind.COMMENT_EXTENSION:
        return gif.remove_comment(data, loc.start)
    raise PglotError(f"cannot strip covert placed via {loc.via}")


def verify_polyglot(result: ForgeResult) -> bool:
    """Recompute the ForgeResult invariants from its bytes alone."""
    data = result.bytes
    recipe = result.recipe
    if not validate(recipe.overt, data).valid:
        return False
    loc = locate_covert(recipe.covert, data)
    if loc is None or loc != result.covert_location:
        return False
    try:
        payload = extract_covert(data, loc)
    except PglotError:
        return False
    return validate(recipe.covert, payload).valid
