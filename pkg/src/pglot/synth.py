"""Deterministic donor synthesis for the self-contained corpus.

Every synthesizable format is generated from (format, seed, size_hint)
alone.  JPEG, RAR, and PE are fixture-only: a real entropy coder or
proprietary archiver is out of scope, so those donors are checked-in
validated files (see ``pglot.corpus.fixture_files``).

Script templates deliberately avoid the token lists of the *other*
script formats so that synthesized donors never cross-match (an HTA
body uses VBScript, not JavaScript; PHP avoids ``function``; and so on).
"""

from __future__ import annotations

import math
import random

from pglot.errors import UnsupportedSynth
from pglot.formats import FormatId, bmp, gif, png, zipar

SYNTH_FORMATS = frozenset({
    FormatId.BMP, FormatId.GIF, FormatId.PNG, FormatId.ZIP, FormatId.JAR,
    FormatId.HTA, FormatId.PHP, FormatId.JS, FormatId.PS1,
})
FIXTURE_FORMATS = frozenset({FormatId.JPEG, FormatId.RAR, FormatId.PE})

_WORDS = (
    "amber", "basalt", "cedar", "delta", "ember", "fjord", "garnet", "harbor",
    "indigo", "juniper", "krypton", "lagoon", "meadow", "nectar", "onyx",
    "prairie", "quartz", "russet", "sierra", "tundra", "umber", "velvet",
    "walnut", "xenon", "yarrow", "zephyr",
)


def _rng(seed: int) -> random.Random:
    return random.Random(seed)


def _ident(rng: random.Random) -> str:
    return rng.choice(_WORDS) + str(rng.randrange(10, 99))


def _prose(rng: random.Random, nwords: int) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(nwords))


def _image_dims(size_hint: int, bytes_per_px: float, overhead: int) -> tuple[int, int]:
    target = max(16, size_hint - overhead)
    side = max(2, int(math.sqrt(target / bytes_per_px)))
    return side, max(2, int(target / (bytes_per_px * side)))


def synth_bmp(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    w, h = _image_dims(size_hint, 3.0, 54)
    return bmp.build(w, h, rng.randbytes(w * h * 3))


def synth_gif(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    w, h = _image_dims(size_hint, 1.2, 64)
    palette = rng.randbytes(3 * 8)
    pixels = bytes(rng.randrange(8) for _ in range(w * h))
    return gif.build(w, h, pixels, palette)


def synth_png(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    w, h = _image_dims(size_hint, 3.1, 70)
    return png.build(w, h, rng.randbytes(w * h * 3))


def _zip_entries(rng: random.Random, size_hint: int) -> list[tuple[str, bytes]]:
    n = rng.randrange(1, 4)
    per = max(32, size_hint // n)
    entries = []
    for _ in range(n):
        name = f"{_ident(rng)}.{rng.choice(['txt', 'dat', 'cfg'])}"
        if rng.random() < 0.5:
            content = (_prose(rng, per // 6) + "\n").encode()
        else:
            content = rng.randbytes(per)
        entries.append((name, content))
    return entries


def synth_zip(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    return zipar.build(_zip_entries(rng, size_hint))


def synth_jar(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    manifest = (
        "Manifest-Version: 1.0\r\n"
        f"Created-By: {_ident(rng)}\r\n"
        f"Main-Class: {_ident(rng).capitalize()}\r\n\r\n"
    ).encode()
    entries = [(f"{_ident(rng).capitalize()}.class", rng.randbytes(max(64, size_hint // 2)))]
    return zipar.build_jar(entries, manifest)


def synth_hta(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    app = _ident(rng)
    lines = [
        "<html>",
        "<head>",
        f'<title>{_prose(rng, 3)}</title>',
        f'<hta:application id="{app}" applicationname="{app}" border="thin" />',
        '<script language="VBScript">',
        f"Dim {_ident(rng)}",
        f'{_ident(rng)} = "{_prose(rng, 4)}"',
        f"Sub Window_OnLoad",
        f'    MsgBox "{_prose(rng, 3)}"',
        "End Sub",
        "</script>",
        "</head>",
        "<body>",
    ]
    while sum(len(l) + 1 for l in lines) < size_hint - 32:
        lines.append(f"<p>{_prose(rng, rng.randrange(4, 12))}</p>")
    lines += ["</body>", "</html>"]
    return ("\n".join(lines) + "\n").encode()


def synth_php(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    lines = [
        "<?php",
        f"// {_prose(rng, 4)}",
        f"${_ident(rng)} = '{_prose(rng, 3)}';",
        f"${_ident(rng)} = {rng.randrange(1, 5000)};",
    ]
    while sum(len(l) + 1 for l in lines) < size_hint - 32:
        a, b = _ident(rng), _ident(rng)
        lines.append(f"${a} = ${b} ?? '{_prose(rng, rng.randrange(2, 8))}';")
        lines.append(f"echo ${a};")
    lines.append("?>")
    return ("\n".join(lines) + "\n").encode()


def synth_js(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    fn = _ident(rng)
    lines = [
        f"// {_prose(rng, 4)}",
        f"const {_ident(rng)} = '{_prose(rng, 3)}';",
        f"function {fn}(x) {{ return x + {rng.randrange(1, 100)}; }}",
        f"console.log({fn}({rng.randrange(1, 100)}));",
    ]
    while sum(len(l) + 1 for l in lines) < size_hint - 32:
        a = _ident(rng)
        lines.append(f"const {a} = (n) => n * {rng.randrange(2, 9)}; // {_prose(rng, 3)}")
    return ("\n".join(lines) + "\n").encode()


def synth_ps1(seed: int, size_hint: int) -> bytes:
    rng = _rng(seed)
    lines = [
        f"param([string]${_ident(rng)} = '{_prose(rng, 2)}')",
        f"# {_prose(rng, 4)}",
        f"Write-Host '{_prose(rng, 3)}' -ErrorAction SilentlyContinue",
    ]
    while sum(len(l) + 1 for l in lines) < size_hint - 32:
        a = _ident(rng)
        lines.append(f"${a} = '{_prose(rng, rng.randrange(2, 8))}'")
        lines.append(f"Write-Output ${a}")
    return ("\n".join(lines) + "\n").encode()


_BUILDERS = {
    FormatId.BMP: synth_bmp,
    FormatId.GIF: synth_gif,
    FormatId.PNG: synth_png,
    FormatId.ZIP: synth_zip,
    FormatId.JAR: synth_jar,
    FormatId.HTA: synth_hta,
    FormatId.PHP: synth_php,
    FormatId.JS: synth_js,
    FormatId.PS1: synth_ps1,
}


def synth_donor(fmt: FormatId, seed: int, size_hint: int = 1024) -> bytes:
    """Deterministically synthesize a valid monoglot of ``fmt``."""
    if fmt in FIXTURE_FORMATS:
        raise UnsupportedSynth(f"{fmt} donors come from checked-in fixtures, not synthesis")
    if fmt not in SYNTH_FORMATS:
        raise UnsupportedSynth(f"no synthesizer for {fmt}")
    return _BUILDERS[fmt](seed, max(64, size_hint))
