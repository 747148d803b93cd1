"""Structural rule scanning of images."""

import pytest

from pglot.formats import FormatId
from pglot.forge import Method, Recipe, forge
from pglot.scan import Severity, scan_parasites, scan_trailing, verdict
from pglot.formats import jpeg as jpegfmt
from pglot.synth import synth_donor


class TestScanTrailing:
    def test_monoglot_gif_clean(self, donors):
        assert scan_trailing(donors[FormatId.GIF]) == []

    def test_gif_rar_stack_flagged(self, donors):
        out = forge(Recipe(FormatId.RAR, FormatId.GIF, Method.STACK),
                    donors[FormatId.RAR], donors[FormatId.GIF])
        findings = scan_trailing(out.bytes)
        assert len(findings) == 1
        f = findings[0]
        assert f.severity is Severity.SUSPECT
        assert f.offset == len(donors[FormatId.GIF])
        assert f.suspected is FormatId.RAR

    def test_single_trailing_zero_byte(self, donors):
        data = donors[FormatId.PNG] + b"\x00"
        findings = scan_trailing(data)
        assert len(findings) == 1
        assert findings[0].length == 1
        assert findings[0].suspected is None

    def test_non_image_reports_info(self, donors):
        findings = scan_trailing(donors[FormatId.ZIP])
        assert [f.rule for f in findings] == ["not-an-image"]
        assert findings[0].severity is Severity.INFO


class TestScanParasites:
    def test_png_php_chunk_flagged(self, donors):
        out = forge(Recipe(FormatId.PHP, FormatId.PNG, Method.PARASITE),
                    donors[FormatId.PHP], donors[FormatId.PNG])
        findings = [f for f in scan_parasites(out.bytes) if f.severity is Severity.SUSPECT]
        assert len(findings) == 1
        assert findings[0].suspected is FormatId.PHP

    def test_benign_jpeg_comment_is_info_only(self, donors):
        with_comment, _ = jpegfmt.insert_comment(donors[FormatId.JPEG],
                                                 b"shot on a rainy tuesday")
        findings = scan_parasites(with_comment)
        assert findings and all(f.severity is Severity.INFO for f in findings)
        assert verdict(with_comment).clean

    def test_gif_comment_with_ps1_flagged(self, donors):
        out = forge(Recipe(FormatId.PS1, FormatId.GIF, Method.PARASITE),
                    donors[FormatId.PS1], donors[FormatId.GIF])
        findings = [f for f in scan_parasites(out.bytes) if f.severity is Severity.SUSPECT]
        assert findings and findings[0].suspected is FormatId.PS1


class TestVerdict:
    def test_monoglot_bmp_clean(self, donors):
        assert verdict(donors[FormatId.BMP]).clean

    def test_every_image_overt_polyglot_suspect(self, donors):
        from pglot.forge import combination_matrix
        for (covert, overt), methods in combination_matrix().items():
            if not overt.is_image:
                continue
            for method in sorted(methods, key=str):
                out = forge(Recipe(covert, overt, method), donors[covert], donors[overt])
                v = verdict(out.bytes)
                assert not v.clean, (covert, overt, method)

    def test_non_image_clean_with_info(self, donors):
        v = verdict(donors[FormatId.PE])
        assert v.clean
        assert any(f.rule == "not-an-image" for f in v.findings)

    def test_synth_monoglot_images_have_zero_false_positives(self):
        for fmt in (FormatId.BMP, FormatId.GIF, FormatId.PNG):
            for seed in range(25):
                data = synth_donor(fmt, seed, 400 + 97 * seed)
                assert verdict(data).clean, (fmt, seed)
