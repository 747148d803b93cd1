"""Token-heuristic matching for the script formats (PHP, HTA, PS1, JS).

Script formats carry no required magic, so matching is by opening
tokens.  Matching is done on a lowercased copy of the buffer: HTML/HTA
tags and PowerShell cmdlets are case-insensitive in their real parsers,
and mixed-case JavaScript keywords in prose are an accepted
false-positive risk that the documented ambiguity notes cover.

Rules:

* PHP — the literal ``<?php`` opening tag.
* HTA — ``<hta:application``, or failing that an HTML tag plus a script
  tag (MSHTA executes generously parsed HTML with script).
* PS1 — at least 2 distinct tokens from ``PS1_TOKENS``.
* JS  — at least 2 distinct tokens from ``JS_TOKENS``.
"""

from __future__ import annotations

from pglot.formats.types import FormatId, InsertionPoint, ParseReport, PointKind

PHP_OPEN = b"<?php"
HTA_SIGNATURE = b"<hta:application"
HTML_TAGS = (b"<html", b"<head", b"<body")
SCRIPT_TAGS = (b"<script", b"<vbscript")

PS1_TOKENS = (
    b"param(",
    b"write-host",
    b"write-output",
    b"$psscriptroot",
    b"-erroraction",
    b"get-childitem",
    b"foreach-object",
    b"set-strictmode",
)

JS_TOKENS = (
    b"function",
    b"=>",
    b"document.",
    b"console.log",
    b"var ",
    b"let ",
    b"const ",
)


def _first_token_hits(low: bytes, tokens: tuple[bytes, ...], need: int) -> int | None:
    """Offset of the earliest token if >= ``need`` distinct tokens occur."""
    hits = [low.find(t) for t in tokens]
    hits = [h for h in hits if h >= 0]
    if len(hits) < need:
        return None
    return min(hits)


def find_script(fmt: FormatId, data: bytes) -> int | None:
    """Offset where the script's opening evidence begins, or None."""
    low = data.lower()
    if fmt is FormatId.PHP:
        at = low.find(PHP_OPEN)
        return at if at >= 0 else None
    if fmt is FormatId.HTA:
        at = low.find(HTA_SIGNATURE)
        if at >= 0:
            return at
        html = _first_token_hits(low, HTML_TAGS, 1)
        script = _first_token_hits(low, SCRIPT_TAGS, 1)
        if html is not None and script is not None:
            return min(html, script)
        return None
    if fmt is FormatId.PS1:
        return _first_token_hits(low, PS1_TOKENS, 2)
    if fmt is FormatId.JS:
        return _first_token_hits(low, JS_TOKENS, 2)
    raise ValueError(f"{fmt} is not a script format")


def script_matches(fmt: FormatId, data: bytes) -> bool:
    return find_script(fmt, data) is not None


def parse(fmt: FormatId, data: bytes) -> ParseReport:
    rep = ParseReport(fmt, valid=False)
    if len(data) == 0:
        rep.note("empty input")
        return rep
    if find_script(fmt, data) is None:
        rep.note(f"required {fmt} tokens not found")
        return rep
    # Scripts own the whole buffer; lenient by design (generous parsers
    # execute malformed input, so structural strictness would be wrong).
    rep.valid = True
    rep.logical_end = len(data)
    return rep


def insertion_points(data: bytes, report: ParseReport) -> list[InsertionPoint]:
    return [InsertionPoint(PointKind.APPEND_AFTER_LOGICAL_END, report.logical_end, None)]
