#!/usr/bin/env python3
"""One-time generator and validator for the checked-in donor fixtures.

JPEG donors are encoded with Pillow (we parse JPEG but do not write an
entropy coder); RAR and PE donors are emitted structurally.  Every
fixture must pass its pglot validator with logical_end == file size,
identify as its own format, and recover exactly its own label.  JPEGs
are additionally round-tripped through Pillow as an independent check.

Deterministic: re-running reproduces the checked-in bytes.
"""

from __future__ import annotations

import io
import random
import struct
from pathlib import Path

from PIL import Image

from pglot.formats import FormatId, identify_first, recover_labels, validate
from pglot.formats import rar as rarfmt

COUNT = 200
MASTER_SEED = 20240
OUT = Path(__file__).resolve().parent.parent / "src" / "pglot" / "fixtures"

_WORDS = ("ledger", "spool", "manifest", "report", "backup", "notes", "chart")


def make_jpeg(seed: int) -> bytes:
    rng = random.Random(seed)
    w = rng.randrange(24, 72)
    h = rng.randrange(24, 72)
    img = Image.frombytes("RGB", (w, h), rng.randbytes(w * h * 3))
    buf = io.BytesIO()
    img.save(buf, format="JPEG", quality=rng.randrange(55, 92))
    return buf.getvalue()


def make_rar(seed: int) -> bytes:
    rng = random.Random(seed)
    entries = []
    for _ in range(rng.randrange(1, 3)):
        name = f"{rng.choice(_WORDS)}{rng.randrange(10, 99)}.dat"
        entries.append((name, rng.randbytes(rng.randrange(200, 900))))
    return rarfmt.build(entries)


def _optional_header(pe32plus: bool, entry_rva: int, code_size: int,
                     size_of_image: int, size_of_headers: int) -> bytes:
    if pe32plus:
        opt = struct.pack("<HBB", 0x20B, 14, 0)
        opt += struct.pack("<IIIII", code_size, 0, 0, entry_rva, 0x1000)
        opt += struct.pack("<Q", 0x140000000)
    else:
        opt = struct.pack("<HBB", 0x10B, 14, 0)
        opt += struct.pack("<IIIII", code_size, 0, 0, entry_rva, 0x1000)
        opt += struct.pack("<II", 0x2000, 0x400000)   # BaseOfData, ImageBase
    opt += struct.pack("<II", 0x1000, 0x200)          # section/file alignment
    opt += struct.pack("<HHHHHH", 6, 0, 0, 0, 6, 0)   # version fields
    opt += struct.pack("<I", 0)                       # Win32VersionValue
    opt += struct.pack("<II", size_of_image, size_of_headers)
    opt += struct.pack("<I", 0)                       # CheckSum
    opt += struct.pack("<HH", 3, 0)                   # console subsystem
    if pe32plus:
        opt += struct.pack("<QQQQ", 0x100000, 0x1000, 0x100000, 0x1000)
    else:
        opt += struct.pack("<IIII", 0x100000, 0x1000, 0x100000, 0x1000)
    opt += struct.pack("<II", 0, 16)                  # LoaderFlags, dir count
    opt += b"\x00" * 128                              # empty data directories
    assert len(opt) == (0xF0 if pe32plus else 0xE0)
    return opt


def make_pe(seed: int) -> bytes:
    """A minimal well-formed PE: DOS header + stub, COFF header, optional
    header, 1-2 sections whose raw data ends exactly at EOF."""
    rng = random.Random(seed)
    machine = rng.choice([0x014C, 0x8664])
    pe32plus = machine == 0x8664
    n_sections = rng.randrange(1, 3)
    file_align = 0x200
    e_lfanew = 0x80

    dos = bytearray(64)
    dos[0:2] = b"MZ"
    struct.pack_into("<I", dos, 0x3C, e_lfanew)
    stub = (b"\x0e\x1f\xba\x0e\x00\xb4\x09\xcd\x21\xb8\x01\x4c\xcd\x21"
            b"This program cannot be run in DOS mode.\r\r\n$")
    head = bytes(dos) + stub
    head += b"\x00" * (e_lfanew - len(head))

    opt_size = 0xF0 if pe32plus else 0xE0
    headers_end = e_lfanew + 4 + 20 + opt_size + n_sections * 40
    size_of_headers = (headers_end + file_align - 1) // file_align * file_align

    names = [b".text\x00\x00\x00", b".data\x00\x00\x00"]
    sections = []
    raw_ptr = size_of_headers
    virt = 0x1000
    for i in range(n_sections):
        raw_size = file_align * rng.randrange(1, 4)
        sections.append((names[i], virt, raw_size, raw_ptr))
        raw_ptr += raw_size
        virt += (raw_size + 0xFFF) // 0x1000 * 0x1000

    characteristics = 0x0022 if pe32plus else 0x0102
    coff = struct.pack("<HHIIIHH", machine, n_sections, rng.randrange(2**31),
                       0, 0, opt_size, characteristics)
    opt = _optional_header(pe32plus, sections[0][1], sections[0][2], virt, size_of_headers)

    table = bytearray()
    for name, va, raw_size, ptr in sections:
        flags = 0x60000020 if name.startswith(b".text") else 0xC0000040
        table += struct.pack("<8sIIIIIIHHI", name, raw_size, va, raw_size, ptr,
                             0, 0, 0, 0, flags)

    out = bytearray(head + b"PE\x00\x00" + coff + opt + table)
    out += b"\x00" * (size_of_headers - len(out))
    for _, _, raw_size, ptr in sections:
        assert len(out) == ptr
        out += rng.randbytes(raw_size)
    return bytes(out)


_MAKERS = {FormatId.JPEG: (make_jpeg, "jpeg", ".jpg"),
           FormatId.RAR: (make_rar, "rar", ".rar"),
           FormatId.PE: (make_pe, "pe", ".exe")}


def main() -> None:
    for fmt, (maker, sub, ext) in _MAKERS.items():
        outdir = OUT / sub
        outdir.mkdir(parents=True, exist_ok=True)
        for old in outdir.glob(f"*{ext}"):
            old.unlink()
        sizes = []
        for i in range(COUNT):
            data = maker(MASTER_SEED + i)
            assert identify_first(data) is fmt, (fmt, i)
            rep = validate(fmt, data)
            assert rep.valid, (fmt, i, rep.notes)
            assert rep.logical_end == len(data), (fmt, i, rep.logical_end, len(data))
            assert recover_labels(data) == {fmt}, (fmt, i)
            if fmt is FormatId.JPEG:
                Image.open(io.BytesIO(data)).verify()
            (outdir / f"{sub}_{i:03d}{ext}").write_bytes(data)
            sizes.append(len(data))
        print(f"{fmt}: {COUNT} fixtures, {min(sizes)}-{max(sizes)} bytes")


if __name__ == "__main__":
    main()
