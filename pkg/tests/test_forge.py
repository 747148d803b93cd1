"""Combination matrix, forging, round trips, and verification."""

import pytest

from pglot.errors import DonorInvalid, IllegalRecipe, PayloadTooLarge
from pglot.formats import FormatId, PointKind, locate_covert, validate
from pglot.forge import (
    ForgeResult,
    Method,
    Recipe,
    combination_matrix,
    extract_payload,
    forge,
    matrix_text,
    strip_covert,
    verify_polyglot,
)
from pglot.formats import recover_labels
from pglot.synth import synth_donor


class TestMatrix:
    def test_pair_count(self):
        assert len(combination_matrix()) == 30

    def test_known_pairs(self):
        m = combination_matrix()
        assert m[(FormatId.HTA, FormatId.JPEG)] == {Method.STACK, Method.PARASITE}
        assert m[(FormatId.BMP, FormatId.ZIP)] == {Method.STACK}
        assert (FormatId.PNG, FormatId.BMP) not in m  # two offset-zero magics

    def test_stable_across_calls(self):
        assert combination_matrix() == combination_matrix()
        assert matrix_text() == matrix_text()

    def test_parasite_only_with_comment_overts(self):
        for (covert, overt), methods in combination_matrix().items():
            if Method.PARASITE in methods:
                assert overt in (FormatId.JPEG, FormatId.PNG, FormatId.GIF, FormatId.ZIP)


class TestForge:
    def test_every_pair_and_method(self, donors):
        for (covert, overt), methods in sorted(combination_matrix().items(),
                                               key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            for method in sorted(methods, key=str):
                recipe = Recipe(covert, overt, method)
                result = forge(recipe, donors[covert], donors[overt])
                assert validate(overt, result.bytes).valid, (covert, overt, method)
                assert verify_polyglot(result), (covert, overt, method)
                assert extract_payload(result.bytes, result.covert_location) == donors[covert]
                assert strip_covert(result.bytes, result.covert_location) == donors[overt]
                assert recover_labels(result.bytes) == {covert, overt}

    def test_stack_puts_offset_zero_magic_first(self, donors):
        out = forge(Recipe(FormatId.ZIP, FormatId.JPEG, Method.STACK),
                    donors[FormatId.ZIP], donors[FormatId.JPEG])
        assert out.bytes.startswith(b"\xff\xd8\xff")
        assert out.bytes == donors[FormatId.JPEG] + donors[FormatId.ZIP]
        out = forge(Recipe(FormatId.BMP, FormatId.ZIP, Method.STACK),
                    donors[FormatId.BMP], donors[FormatId.ZIP])
        assert out.bytes == donors[FormatId.BMP] + donors[FormatId.ZIP]

    def test_determinism(self, donors):
        r = Recipe(FormatId.PHP, FormatId.PNG, Method.PARASITE)
        a = forge(r, donors[FormatId.PHP], donors[FormatId.PNG])
        b = forge(r, donors[FormatId.PHP], donors[FormatId.PNG])
        assert a.bytes == b.bytes

    def test_illegal_pair(self, donors):
        with pytest.raises(IllegalRecipe):
            forge(Recipe(FormatId.PNG, FormatId.BMP, Method.STACK),
                  donors[FormatId.PNG], donors[FormatId.BMP])

    def test_illegal_method(self, donors):
        with pytest.raises(IllegalRecipe):
            forge(Recipe(FormatId.ZIP, FormatId.JPEG, Method.PARASITE),
                  donors[FormatId.ZIP], donors[FormatId.JPEG])

    def test_empty_covert_donor_invalid(self, donors):
        with pytest.raises(DonorInvalid):
            forge(Recipe(FormatId.HTA, FormatId.PNG, Method.STACK), b"", donors[FormatId.PNG])

    def test_corrupt_overt_donor_invalid(self, donors):
        with pytest.raises(DonorInvalid):
            forge(Recipe(FormatId.HTA, FormatId.PNG, Method.STACK),
                  donors[FormatId.HTA], donors[FormatId.PNG][:-2])

    def test_archive_comment_payload_cap(self, donors):
        big = synth_donor(FormatId.HTA, 1, 70000)
        assert len(big) > 65535
        with pytest.raises(PayloadTooLarge):
            forge(Recipe(FormatId.HTA, FormatId.ZIP, Method.PARASITE),
                  big, donors[FormatId.ZIP])

    def test_overt_critical_structures_preserved(self, donors):
        from pglot.sanitize import whitelisted_structures
        for overt in (FormatId.PNG, FormatId.GIF, FormatId.JPEG):
            result = forge(Recipe(FormatId.PHP, overt, Method.PARASITE),
                           donors[FormatId.PHP], donors[overt])
            assert (whitelisted_structures(overt, result.bytes)
                    == whitelisted_structures(overt, donors[overt]))


class TestVerifyPolyglot:
    def test_accepts_forge_output(self, donors):
        out = forge(Recipe(FormatId.HTA, FormatId.GIF, Method.PARASITE),
                    donors[FormatId.HTA], donors[FormatId.GIF])
        assert verify_polyglot(out)

    def test_rejects_zeroed_payload(self, donors):
        out = forge(Recipe(FormatId.HTA, FormatId.GIF, Method.PARASITE),
                    donors[FormatId.HTA], donors[FormatId.GIF])
        loc = out.covert_location
        mutated = bytearray(out.bytes)
        mutated[loc.start:loc.start + loc.length] = b"\x00" * loc.length
        fake = ForgeResult(bytes(mutated), out.recipe, loc)
        assert not verify_polyglot(fake)

    def test_rejects_monoglot_wrapper(self, donors):
        from pglot.formats import CovertLocation
        png = donors[FormatId.PNG]
        fake = ForgeResult(png, Recipe(FormatId.HTA, FormatId.PNG, Method.STACK),
                           CovertLocation(FormatId.HTA, 0, len(png),
                                          PointKind.APPEND_AFTER_LOGICAL_END))
        assert not verify_polyglot(fake)
