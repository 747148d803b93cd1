"""Donor synthesis, ingestion, dataset generation, and holdout checks."""

import hashlib
import json
import zipfile
import io

import pytest

from pglot.corpus import (
    DatasetConfig,
    Role,
    build_dataset,
    fixture_files,
    ingest_dir,
    load_manifest,
    load_samples,
    save_manifest,
    verify_holdout,
)
from pglot.errors import UnsupportedSynth
from pglot.formats import FormatId, identify_first, recover_labels, validate
from pglot.formats import png as pngfmt
from pglot.synth import SYNTH_FORMATS, synth_donor

SMALL = DatasetConfig(monoglots_per_format=4, polyglots_per_pair=3, donors_per_format=5)


class TestSynthDonor:
    @pytest.mark.parametrize("fmt", sorted(SYNTH_FORMATS, key=str), ids=str)
    def test_validates_and_identifies(self, fmt):
        data = synth_donor(fmt, seed=1, size_hint=900)
        assert identify_first(data) is fmt
        assert validate(fmt, data).valid

    def test_deterministic_in_inputs(self):
        a = synth_donor(FormatId.BMP, seed=1, size_hint=64)
        b = synth_donor(FormatId.BMP, seed=1, size_hint=64)
        assert a == b
        assert a != synth_donor(FormatId.BMP, seed=2, size_hint=64)

    def test_png_chunk_crcs_verify_independently(self):
        import struct
        import zlib
        data = synth_donor(FormatId.PNG, seed=7, size_hint=256)
        chunks, err = pngfmt.iter_chunks(data)
        assert err is None
        for c in chunks:
            stored = struct.unpack(">I", data[c.end - 4:c.end])[0]
            assert stored == zlib.crc32(data[c.offset + 4:c.end - 4]) & 0xFFFFFFFF

    def test_stored_zip_readable_by_stdlib(self):
        data = synth_donor(FormatId.ZIP, seed=4, size_hint=800)
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            assert zf.namelist()
            assert zf.testzip() is None

    def test_jar_contains_manifest(self):
        data = synth_donor(FormatId.JAR, seed=4, size_hint=800)
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            assert "META-INF/MANIFEST.MF" in zf.namelist()

    @pytest.mark.parametrize("fmt", [FormatId.RAR, FormatId.JPEG, FormatId.PE], ids=str)
    def test_fixture_only_formats_refuse_synthesis(self, fmt):
        with pytest.raises(UnsupportedSynth):
            synth_donor(fmt, seed=1, size_hint=100)


class TestFixtures:
    @pytest.mark.parametrize("fmt", [FormatId.JPEG, FormatId.RAR, FormatId.PE], ids=str)
    def test_fixtures_valid_and_plentiful(self, fmt):
        files = fixture_files(fmt)
        assert len(files) >= 190
        for name, data in files[:5]:
            assert identify_first(data) is fmt
            rep = validate(fmt, data)
            assert rep.valid and rep.logical_end == len(data)


class TestIngest:
    def test_mismatch_duplicate_and_corrupt(self, tmp_path):
        jpeg = fixture_files(FormatId.JPEG)[0][1]
        png = synth_donor(FormatId.PNG, 1, 500)
        (tmp_path / "wrong.png").write_bytes(jpeg)        # JPEG stored as .png
        (tmp_path / "ok.png").write_bytes(png)
        (tmp_path / "dup.png").write_bytes(png)           # duplicate contents
        broken = bytearray(png)
        broken[-5] ^= 0xFF                                 # flip inside IEND CRC
        (tmp_path / "bad.png").write_bytes(bytes(broken))
        (tmp_path / "other.xyz").write_bytes(b"?")
        samples, rejects = ingest_dir(tmp_path)
        assert len(samples) == 1
        assert samples[0].labels == {FormatId.PNG}
        reasons = {r.path.rsplit("/", 1)[-1]: r.reason for r in rejects}
        assert "mismatch" in reasons["wrong.png"]
        assert "bad.png" in reasons
        assert "extension" in reasons["other.xyz"]


class TestBuildDataset:
    def test_counts_and_roles(self, tmp_path):
        m = build_dataset(tmp_path, SMALL, seed=3)
        mono = [s for s in m.samples if s.role in (Role.TRAIN, Role.TEST) and not s.is_polyglot]
        poly = [s for s in m.samples if s.is_polyglot]
        donors = [s for s in m.samples if s.role in (Role.DONOR_TRAIN, Role.DONOR_TEST)]
        assert len(mono) == 12 * SMALL.monoglots_per_format
        assert len(poly) == 30 * SMALL.polyglots_per_pair
        assert len(donors) == 12 * SMALL.donors_per_format
        assert all(len(s.labels) == 2 for s in poly)
        assert all(s.covert is not None and s.method is not None for s in poly)

    def test_zero_polyglots_is_valid(self, tmp_path):
        cfg = DatasetConfig(monoglots_per_format=2, polyglots_per_pair=0, donors_per_format=2)
        m = build_dataset(tmp_path, cfg, seed=1)
        assert not any(s.is_polyglot for s in m.samples)
        assert verify_holdout(m, tmp_path).ok

    def test_rebuild_is_byte_identical(self, tmp_path):
        build_dataset(tmp_path / "a", SMALL, seed=9)
        build_dataset(tmp_path / "b", SMALL, seed=9)
        da = hashlib.sha256((tmp_path / "a" / "manifest.jsonl").read_bytes()).hexdigest()
        db = hashlib.sha256((tmp_path / "b" / "manifest.jsonl").read_bytes()).hexdigest()
        assert da == db
        # spot-check a few stored files as well
        for rel in [s.path for s in load_manifest(tmp_path / "a" / "manifest.jsonl").samples][:10]:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_label_recovery_matches_manifest(self, tmp_path):
        m = build_dataset(tmp_path, SMALL, seed=5)
        for raw, s in load_samples(m, tmp_path, Role.TRAIN, Role.TEST):
            assert recover_labels(raw) == set(s.labels), s.path

    def test_manifest_fields_exact(self, tmp_path):
        build_dataset(tmp_path, SMALL, seed=2)
        lines = (tmp_path / "manifest.jsonl").read_text().splitlines()
        header = json.loads(lines[0])
        assert list(header) == ["version", "seed", "matrix_hash"]
        mono_rec = json.loads(lines[1])
        assert list(mono_rec) == ["sha256", "path", "labels", "role", "seed"]
        poly_rec = next(json.loads(l) for l in lines[1:] if "covert" in l)
        assert list(poly_rec) == ["sha256", "path", "labels", "role",
                                  "covert", "overt", "method", "seed"]

    def test_manifest_roundtrip(self, tmp_path):
        m = build_dataset(tmp_path, SMALL, seed=2)
        loaded = load_manifest(tmp_path / "manifest.jsonl")
        assert loaded.matrix_hash == m.matrix_hash
        assert [s.sha256 for s in loaded.samples] == [s.sha256 for s in m.samples]
        save_manifest(loaded, tmp_path / "again.jsonl")
        assert (tmp_path / "again.jsonl").read_bytes() == (tmp_path / "manifest.jsonl").read_bytes()


class TestVerifyHoldout:
    def test_passes_on_build_output(self, tmp_path):
        m = build_dataset(tmp_path, SMALL, seed=4)
        assert verify_holdout(m, tmp_path).ok

    def test_empty_manifest_passes(self):
        from pglot.corpus import Manifest
        assert verify_holdout(Manifest(1, 0, "0" * 64)).ok

    def test_detects_role_reassignment(self, tmp_path):
        m = build_dataset(tmp_path, SMALL, seed=4)
        donor_train = next(s for s in m.samples if s.role is Role.DONOR_TRAIN)
        poly_test = next(s for s in m.samples if s.is_polyglot and s.role is Role.TEST)
        # claim a TEST polyglot was allowed to use TRAIN donors by flipping roles
        import dataclasses
        m.samples[m.samples.index(poly_test)] = dataclasses.replace(poly_test, role=Role.TRAIN)
        report = verify_holdout(m, tmp_path)
        assert not report.ok

    def test_detects_train_test_sha_overlap(self, tmp_path):
        import dataclasses
        m = build_dataset(tmp_path, SMALL, seed=4)
        train = next(s for s in m.samples if s.role is Role.TRAIN)
        m.samples.append(dataclasses.replace(train, role=Role.TEST))
        report = verify_holdout(m)
        assert any("both" in p for p in report.problems)
