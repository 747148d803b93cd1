"""Identification, validation, insertion points, and covert location."""

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pglot.corpus import fixture_files
from pglot.formats import (
    ALL_FORMATS,
    CovertLocation,
    FormatId,
    PointKind,
    extract_covert,
    identify_first,
    insertion_points,
    locate_covert,
    recover_labels,
    validate,
)
from pglot.formats import png as pngfmt
from pglot.formats import zipar
from pglot.forge import Method, Recipe, forge
from pglot.synth import SYNTH_FORMATS, synth_donor


class TestIdentifyFirst:
    def test_empty_input_is_unknown(self):
        assert identify_first(b"") is FormatId.UNKNOWN

    def test_random_text_is_unknown(self):
        assert identify_first(b"just some plain words\n") is FormatId.UNKNOWN

    def test_every_donor_identifies_as_itself(self, donors):
        for fmt, data in donors.items():
            assert identify_first(data) is fmt

    def test_pe_fixture(self):
        data = fixture_files(FormatId.PE)[0][1]
        assert data[:2] == b"MZ"
        e_lfanew = struct.unpack_from("<I", data, 0x3C)[0]
        assert data[e_lfanew:e_lfanew + 4] == b"PE\x00\x00"
        assert identify_first(data) is FormatId.PE

    def test_mz_without_pe_signature_is_unknown(self):
        assert identify_first(b"MZ" + b"\x00" * 100) is FormatId.UNKNOWN

    def test_zip_with_manifest_is_jar(self):
        jar = zipar.build_jar([("A.class", b"\xca\xfe\xba\xbe")], b"Manifest-Version: 1.0\r\n")
        assert identify_first(jar) is FormatId.JAR
        arc, _ = zipar.find_archive(jar)
        assert any(e.name == b"META-INF/MANIFEST.MF" for e in arc.entries)

    def test_zip_without_manifest_is_zip(self):
        plain = zipar.build([("a.txt", b"hello")])
        assert identify_first(plain) is FormatId.ZIP

    def test_binary_magic_wins_over_script_tokens(self):
        gif = synth_donor(FormatId.GIF, 5, 600)
        php = synth_donor(FormatId.PHP, 5, 400)
        out = forge(Recipe(FormatId.PHP, FormatId.GIF, Method.PARASITE), php, gif)
        assert identify_first(out.bytes) is FormatId.GIF

    def test_deterministic(self, donors):
        for data in donors.values():
            assert identify_first(data) is identify_first(bytes(data))


class TestValidate:
    def test_donors_validate_with_exact_logical_end(self, donors):
        for fmt, data in donors.items():
            rep = validate(fmt, data)
            assert rep.valid, (fmt, rep.notes)
            assert rep.logical_end == len(data)

    def test_png_crc_flip_names_chunk(self):
        data = synth_donor(FormatId.PNG, 3, 700)
        chunks, _ = pngfmt.iter_chunks(data)
        idat = next(c for c in chunks if c.type == b"IDAT")
        broken = bytearray(data)
        broken[idat.data_offset] ^= 0xFF
        rep = validate(FormatId.PNG, bytes(broken))
        assert not rep.valid
        assert any("IDAT" in note for note in rep.notes)

    def test_hta_signature_is_sufficient(self):
        rep = validate(FormatId.HTA, b"<hta:application id=\"x\" />")
        assert rep.valid

    def test_hta_tolerates_missing_signature_with_html_and_script(self):
        rep = validate(FormatId.HTA, b"<html><script>x</script></html>")
        assert rep.valid

    def test_validate_unknown_rejected(self):
        with pytest.raises(ValueError):
            validate(FormatId.UNKNOWN, b"")

    def test_truncated_archive_invalid(self, donors):
        rep = validate(FormatId.ZIP, donors[FormatId.ZIP][:-6])
        assert not rep.valid

    @settings(max_examples=60, deadline=None)
    @given(st.binary(max_size=4096), st.sampled_from(sorted(ALL_FORMATS, key=str)))
    def test_total_on_arbitrary_bytes(self, data, fmt):
        rep = validate(fmt, data)
        if rep.valid:
            assert rep.logical_end <= len(data)


class TestInsertionPoints:
    def test_gif_comment_before_trailer_plus_append(self, donors):
        points = insertion_points(FormatId.GIF, donors[FormatId.GIF])
        kinds = [p.kind for p in points]
        assert PointKind.COMMENT_EXTENSION in kinds
        assert PointKind.APPEND_AFTER_LOGICAL_END in kinds
        comment = next(p for p in points if p.kind is PointKind.COMMENT_EXTENSION)
        assert comment.max_payload == 255
        assert donors[FormatId.GIF][comment.offset] == 0x3B

    def test_zip_archive_comment_capacity(self, donors):
        points = insertion_points(FormatId.ZIP, donors[FormatId.ZIP])
        comment = next(p for p in points if p.kind is PointKind.ARCHIVE_COMMENT)
        assert comment.max_payload == 65535

    def test_pe_overlay_only(self, donors):
        points = insertion_points(FormatId.PE, donors[FormatId.PE])
        assert [p.kind for p in points] == [PointKind.APPEND_AFTER_LOGICAL_END]

    def test_jpeg_com_capacity(self, donors):
        points = insertion_points(FormatId.JPEG, donors[FormatId.JPEG])
        com = next(p for p in points if p.kind is PointKind.COMMENT_SEGMENT)
        assert com.max_payload == 65533

    def test_requires_valid_input(self):
        with pytest.raises(ValueError):
            insertion_points(FormatId.PNG, b"\x89PNG\r\n\x1a\nnot really")

    def test_every_format_has_points(self, donors):
        for fmt, data in donors.items():
            assert insertion_points(fmt, data)


class TestLocateCovert:
    def test_stack_append_location(self, donors):
        gif = donors[FormatId.GIF]
        zipd = donors[FormatId.ZIP]
        out = forge(Recipe(FormatId.ZIP, FormatId.GIF, Method.STACK), zipd, gif)
        loc = out.covert_location
        assert loc == CovertLocation(FormatId.ZIP, len(gif), len(zipd),
                                     PointKind.APPEND_AFTER_LOGICAL_END)
        assert locate_covert(FormatId.ZIP, out.bytes) == loc

    def test_parasite_location(self, donors):
        php = donors[FormatId.PHP]
        jpg = donors[FormatId.JPEG]
        out = forge(Recipe(FormatId.PHP, FormatId.JPEG, Method.PARASITE), php, jpg)
        loc = locate_covert(FormatId.PHP, out.bytes)
        assert loc is not None and loc.via is PointKind.COMMENT_SEGMENT
        assert extract_covert(out.bytes, loc) == php

    def test_monoglot_locates_nothing(self, donors):
        for fmt, data in donors.items():
            for other in ALL_FORMATS:
                if other is fmt:
                    continue
                if other is FormatId.ZIP and fmt is FormatId.JAR:
                    continue  # documented containment: a JAR is a ZIP
                assert locate_covert(other, data) is None, (fmt, other)

    def test_prepended_bmp_located_at_zero(self, donors):
        bmp = donors[FormatId.BMP]
        out = forge(Recipe(FormatId.BMP, FormatId.ZIP, Method.STACK),
                    bmp, donors[FormatId.ZIP])
        assert out.bytes[:2] == b"BM"
        loc = locate_covert(FormatId.BMP, out.bytes)
        assert loc is not None and loc.start == 0
        assert loc.via is PointKind.PREPEND_TOLERATED
        assert extract_covert(out.bytes, loc) == bmp

    def test_image_at_nonzero_offset_not_located(self, donors):
        data = b"\x00" * 7 + donors[FormatId.PNG]
        assert locate_covert(FormatId.PNG, data) is None

    def test_rar_forward_scan(self, donors):
        out = forge(Recipe(FormatId.RAR, FormatId.PNG, Method.STACK),
                    donors[FormatId.RAR], donors[FormatId.PNG])
        loc = locate_covert(FormatId.RAR, out.bytes)
        assert loc is not None
        assert loc.start == len(donors[FormatId.PNG])
        assert extract_covert(out.bytes, loc) == donors[FormatId.RAR]


class TestRecoverLabels:
    def test_monoglots(self, donors):
        for fmt, data in donors.items():
            assert recover_labels(data) == {fmt}

    def test_jar_suppresses_zip(self, donors):
        out = forge(Recipe(FormatId.JAR, FormatId.PNG, Method.STACK),
                    donors[FormatId.JAR], donors[FormatId.PNG])
        assert recover_labels(out.bytes) == {FormatId.JAR, FormatId.PNG}
