"""Donor pools, dataset generation with donor holdout, and manifests.

The holdout discipline: donor files are partitioned into DONOR_TRAIN
and DONOR_TEST by content hash *before* any forging; TRAIN polyglots
are forged only from DONOR_TRAIN donors and TEST polyglots only from
DONOR_TEST donors.  Donors never appear as TRAIN/TEST samples
themselves, so a detector can never score a file whose raw bytes it
met during training.

The manifest is line-delimited JSON: a header line with version, seed,
and the combination-matrix hash, then one record per sample with a
stable field order.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from pglot import forge as forgemod
from pglot import synth
from pglot.errors import ForgeFailure, InsufficientDonors, PglotError
from pglot.forge import Method, Recipe, combination_matrix, matrix_text
from pglot.formats import ALL_FORMATS, FormatId, identify_first, locate_covert, validate

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"

EXTENSIONS = {
    FormatId.BMP: ".bmp", FormatId.GIF: ".gif", FormatId.JPEG: ".jpg",
    FormatId.PNG: ".png", FormatId.ZIP: ".zip", FormatId.JAR: ".jar",
    FormatId.RAR: ".rar", FormatId.PE: ".exe", FormatId.HTA: ".hta",
    FormatId.PHP: ".php", FormatId.JS: ".js", FormatId.PS1: ".ps1",
}
_EXT_TO_FORMAT = {
    ".bmp": FormatId.BMP, ".gif": FormatId.GIF, ".jpg": FormatId.JPEG,
    ".jpeg": FormatId.JPEG, ".png": FormatId.PNG, ".zip": FormatId.ZIP,
    ".jar": FormatId.JAR, ".rar": FormatId.RAR, ".exe": FormatId.PE,
    ".dll": FormatId.PE, ".hta": FormatId.HTA, ".php": FormatId.PHP,
    ".js": FormatId.JS, ".ps1": FormatId.PS1,
}


class Role(enum.Enum):
    TRAIN = "TRAIN"
    TEST = "TEST"
    DONOR_TRAIN = "DONOR_TRAIN"
    DONOR_TEST = "DONOR_TEST"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FileSample:
    sha256: str
    path: str
    labels: frozenset[FormatId]
    role: Role
    covert: FormatId | None = None
    overt: FormatId | None = None
    method: Method | None = None
    seed: int = 0

    @property
    def is_polyglot(self) -> bool:
        return len(self.labels) > 1


@dataclass
class Manifest:
    version: int
    seed: int
    matrix_hash: str
    samples: list[FileSample] = field(default_factory=list)

    def by_role(self, *roles: Role) -> list[FileSample]:
        want = set(roles)
        return [s for s in self.samples if s.role in want]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def derive_seed(*parts) -> int:
    """Stable sub-seed derivation from arbitrary labeled parts."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def matrix_hash() -> str:
    return sha256_hex(matrix_text().encode())


# --- manifest persistence -----------------------------------------------

def _sample_record(s: FileSample) -> dict:
    rec: dict = {
        "sha256": s.sha256,
        "path": s.path,
        "labels": sorted(l.value for l in s.labels),
        "role": s.role.value,
    }
    if s.covert is not None:
        rec["covert"] = s.covert.value
    if s.overt is not None:
        rec["overt"] = s.overt.value
    if s.method is not None:
        rec["method"] = s.method.value
    rec["seed"] = s.seed
    return rec


def save_manifest(manifest: Manifest, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"version": manifest.version, "seed": manifest.seed,
                  "matrix_hash": manifest.matrix_hash}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for s in manifest.samples:
            fh.write(json.dumps(_sample_record(s), separators=(",", ":")) + "\n")


def load_manifest(path: Path) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise PglotError(f"empty manifest: {path}")
    header = json.loads(lines[0])
    manifest = Manifest(header["version"], header["seed"], header["matrix_hash"])
    for ln in lines[1:]:
        rec = json.loads(ln)
        manifest.samples.append(FileSample(
            sha256=rec["sha256"],
            path=rec["path"],
            labels=frozenset(FormatId.parse(l) for l in rec["labels"]),
            role=Role(rec["role"]),
            covert=FormatId.parse(rec["covert"]) if "covert" in rec else None,
            overt=FormatId.parse(rec["overt"]) if "overt" in rec else None,
            method=Method(rec["method"]) if "method" in rec else None,
            seed=rec.get("seed", 0),
        ))
    return manifest


# --- fixtures ------------------------------------------------------------

_FIXTURE_DIRS = {FormatId.JPEG: "jpeg", FormatId.RAR: "rar", FormatId.PE: "pe"}


def fixture_files(fmt: FormatId) -> list[tuple[str, bytes]]:
    """Checked-in validated donors for the fixture-only formats."""
    if fmt not in _FIXTURE_DIRS:
        raise ValueError(f"{fmt} has no fixtures")
    root = resources.files("pglot.fixtures") / _FIXTURE_DIRS[fmt]
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.is_file():
            out.append((entry.name, entry.read_bytes()))
    return out


# --- ingestion -----------------------------------------------------------

@dataclass(frozen=True)
class Reject:
    path: str
    reason: str


def ingest_dir(path: Path) -> tuple[list[FileSample], list[Reject]]:
    """Accept files whose contents match their extension-derived label.

    Mirrors the corpus filtering rules: extension/content mismatches and
    files the validator refuses are rejected; duplicate contents (by
    sha256) are collapsed to one sample.  IO failures are reported, not
    fatal.
    """
    samples: list[FileSample] = []
    rejects: list[Reject] = []
    seen: set[str] = set()
    for p in sorted(Path(path).rglob("*")):
        if not p.is_file():
            continue
        ext = p.suffix.lower()
        fmt = _EXT_TO_FORMAT.get(ext)
        if fmt is None:
            rejects.append(Reject(str(p), f"unsupported extension {ext!r}"))
            continue
        try:
            data = p.read_bytes()
        except OSError as exc:
            rejects.append(Reject(str(p), f"read failed: {exc}"))
            continue
        first = identify_first(data)
        if first is not fmt:
            rejects.append(Reject(str(p), f"extension/content mismatch: contents look like {first}"))
            continue
        rep = validate(fmt, data)
        if not rep.valid:
            rejects.append(Reject(str(p), f"validation failed: {'; '.join(rep.notes) or 'unspecified'}"))
            continue
        digest = sha256_hex(data)
        if digest in seen:
            continue
        seen.add(digest)
        samples.append(FileSample(digest, str(p), frozenset({fmt}), Role.TRAIN))
    return samples, rejects


# --- dataset generation ---------------------------------------------------

@dataclass(frozen=True)
class DatasetConfig:
    """Desk-scale defaults; the reference corpus is orders of magnitude larger."""

    monoglots_per_format: int = 50
    polyglots_per_pair: int = 20
    donors_per_format: int = 12
    test_fraction: float = 0.25
    min_size: int = 512
    max_size: int = 6144


@dataclass(frozen=True)
class _Donor:
    fmt: FormatId
    sha256: str
    data: bytes
    role: Role
    seed: int
    name: str


def _size_hint(rng: random.Random, cfg: DatasetConfig) -> int:
    lo, hi = math.log(cfg.min_size), math.log(cfg.max_size)
    return int(math.exp(rng.uniform(lo, hi)))


def _make_files(fmt: FormatId, count: int, tag: str, seed: int, cfg: DatasetConfig,
                skip: int = 0) -> list[tuple[str, bytes, int]]:
    """(name, bytes, seed) for ``count`` distinct monoglots of ``fmt``.

    Fixture formats draw from the checked-in pool: ``skip`` files are
    passed over first so different tags get disjoint donors.
    """
    out: list[tuple[str, bytes, int]] = []
    if fmt in synth.FIXTURE_FORMATS:
        pool = fixture_files(fmt)
        if skip + count > len(pool):
            raise InsufficientDonors(
                f"need {skip + count} {fmt} fixtures, have {len(pool)}"
            )
        for i, (name, data) in enumerate(pool[skip:skip + count]):
            out.append((name, data, skip + i))
        return out
    seen: set[str] = set()
    attempt = 0
    while len(out) < count:
        sub = derive_seed(seed, tag, fmt.value, attempt)
        rng = random.Random(sub)
        data = synth.synth_donor(fmt, sub, _size_hint(rng, cfg))
        attempt += 1
        digest = sha256_hex(data)
        if digest in seen:
            continue
        seen.add(digest)
        ext = EXTENSIONS[fmt]
        out.append((f"{fmt.value.lower()}_{len(out):03d}{ext}", data, sub))
    return out


def _split_count(n: int, test_fraction: float) -> int:
    """Number of TRAIN items; at least one of each side when n > 1."""
    n_test = max(1, round(n * test_fraction)) if n > 1 else 0
    return n - n_test


def build_dataset(out_dir: Path, cfg: DatasetConfig, seed: int) -> Manifest:
    """Generate the corpus and write ``manifest.jsonl`` under ``out_dir``.

    Deterministic in ``seed``: rebuilding with the same seed and config
    yields byte-identical files and manifest.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(MANIFEST_VERSION, seed, matrix_hash())
    used_sha: set[str] = set()

    def _write(rel: str, data: bytes) -> None:
        p = out_dir / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)

    # Monoglot samples.
    for fmt in ALL_FORMATS:
        files = _make_files(fmt, cfg.monoglots_per_format, "mono", seed, cfg)
        n_train = _split_count(len(files), cfg.test_fraction)
        for i, (name, data, sub) in enumerate(files):
            digest = sha256_hex(data)
            if digest in used_sha:
                raise PglotError(f"sha collision on monoglot {name}")
            used_sha.add(digest)
            rel = f"files/mono/{fmt.value.lower()}/{i:03d}_{digest[:12]}{EXTENSIONS[fmt]}"
            _write(rel, data)
            role = Role.TRAIN if i < n_train else Role.TEST
            manifest.samples.append(FileSample(digest, rel, frozenset({fmt}), role, seed=sub))

    # Donor pools, split before any forging.
    donors: dict[FormatId, dict[Role, list[_Donor]]] = {}
    for fmt in ALL_FORMATS:
        skip = cfg.monoglots_per_format if fmt in synth.FIXTURE_FORMATS else 0
        files = _make_files(fmt, cfg.donors_per_format, "donor", seed, cfg, skip=skip)
        n_train = _split_count(len(files), cfg.test_fraction)
        pool: dict[Role, list[_Donor]] = {Role.DONOR_TRAIN: [], Role.DONOR_TEST: []}
        for i, (name, data, sub) in enumerate(files):
            digest = sha256_hex(data)
            if digest in used_sha:
                raise PglotError(f"sha collision on donor {name}")
            used_sha.add(digest)
            role = Role.DONOR_TRAIN if i < n_train else Role.DONOR_TEST
            rel = f"files/donor/{fmt.value.lower()}/{i:03d}_{digest[:12]}{EXTENSIONS[fmt]}"
            _write(rel, data)
            pool[role].append(_Donor(fmt, digest, data, role, sub, rel))
            manifest.samples.append(FileSample(digest, rel, frozenset({fmt}), role, seed=sub))
        donors[fmt] = pool

    # Polyglot samples, forged strictly within each donor partition.
    pairs = sorted(combination_matrix().items(), key=lambda kv: (kv[0][0].value, kv[0][1].value))
    for (covert, overt), methods in pairs:
        allowed = sorted(methods, key=lambda m: m.value)
        n_train = _split_count(cfg.polyglots_per_pair, cfg.test_fraction)
        used_combo: set[tuple[str, str, Method]] = set()
        for i in range(cfg.polyglots_per_pair):
            role = Role.TRAIN if i < n_train else Role.TEST
            donor_role = Role.DONOR_TRAIN if role is Role.TRAIN else Role.DONOR_TEST
            cpool = donors[covert][donor_role]
            opool = donors[overt][donor_role]
            if not cpool or not opool:
                raise InsufficientDonors(f"no {donor_role} donors for ({covert}, {overt})")
            rng = random.Random(derive_seed(seed, "poly", covert.value, overt.value, i))
            method = allowed[i % len(allowed)]
            for attempt in range(64):
                cd = rng.choice(cpool)
                od = rng.choice(opool)
                combo = (cd.sha256, od.sha256, method)
                if combo not in used_combo:
                    used_combo.add(combo)
                    break
            else:
                raise InsufficientDonors(
                    f"could not find an unused donor combination for ({covert}, {overt})"
                )
            recipe = Recipe(covert, overt, method,
                            seed=derive_seed(seed, "recipe", covert.value, overt.value, i))
            try:
                result = forgemod.forge(recipe, cd.data, od.data)
            except PglotError as exc:
                raise ForgeFailure(f"{recipe}: {exc}") from exc
            if not forgemod.verify_polyglot(result):
                raise ForgeFailure(f"{recipe}: verify_polyglot failed")
            if forgemod.extract_payload(result.bytes, result.covert_location) != cd.data:
                raise ForgeFailure(f"{recipe}: covert payload not byte-recoverable")
            if forgemod.strip_covert(result.bytes, result.covert_location) != od.data:
                raise ForgeFailure(f"{recipe}: overt donor not byte-recoverable")
            digest = sha256_hex(result.bytes)
            if digest in used_sha:
                raise PglotError(f"sha collision on polyglot ({covert}, {overt}, {i})")
            used_sha.add(digest)
            rel = (f"files/poly/{covert.value.lower()}_{overt.value.lower()}/"
                   f"{i:03d}_{digest[:12]}.bin")
            _write(rel, result.bytes)
            manifest.samples.append(FileSample(
                digest, rel, frozenset({covert, overt}), role,
                covert=covert, overt=overt, method=method, seed=recipe.seed,
            ))

    save_manifest(manifest, out_dir / MANIFEST_NAME)
    report = verify_holdout(manifest, out_dir)
    if not report.ok:
        raise PglotError("generated dataset failed holdout verification: "
                         + "; ".join(report.problems))
    return manifest


def load_samples(manifest: Manifest, root: Path, *roles: Role) -> list[tuple[bytes, FileSample]]:
    """Read the bytes of every sample in the given roles, manifest order."""
    out = []
    for s in manifest.by_role(*roles):
        out.append(((Path(root) / s.path).read_bytes(), s))
    return out


# --- holdout verification -------------------------------------------------

@dataclass
class HoldoutReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def verify_holdout(manifest: Manifest, root: Path | None = None) -> HoldoutReport:
    """Check train/test separation and donor discipline.

    With ``root`` given, polyglot files are re-read and their donors
    recovered from the bytes, catching a TEST polyglot forged from a
    DONOR_TRAIN donor even if the manifest says otherwise.
    """
    report = HoldoutReport()
    by_role: dict[Role, set[str]] = {r: set() for r in Role}
    for s in manifest.samples:
        by_role[s.role].add(s.sha256)
    for a, b in [(Role.TRAIN, Role.TEST),
                 (Role.DONOR_TRAIN, Role.DONOR_TEST)]:
        overlap = by_role[a] & by_role[b]
        for sha in sorted(overlap):
            report.problems.append(f"sha {sha[:12]} appears in both {a} and {b}")
    donor_shas = by_role[Role.DONOR_TRAIN] | by_role[Role.DONOR_TEST]
    sample_shas = by_role[Role.TRAIN] | by_role[Role.TEST]
    for sha in sorted(donor_shas & sample_shas):
        report.problems.append(f"donor sha {sha[:12]} also appears as a train/test sample")

    if root is not None:
        donor_role: dict[str, Role] = {}
        for s in manifest.samples:
            if s.role in (Role.DONOR_TRAIN, Role.DONOR_TEST):
                donor_role[s.sha256] = s.role
        for s in manifest.samples:
            if not s.is_polyglot or s.covert is None:
                continue
            want = Role.DONOR_TRAIN if s.role is Role.TRAIN else Role.DONOR_TEST
            try:
                data = (Path(root) / s.path).read_bytes()
            except OSError as exc:
                report.problems.append(f"{s.path}: unreadable ({exc})")
                continue
            loc = locate_covert(s.covert, data)
            if loc is None:
                report.problems.append(f"{s.path}: covert {s.covert} not locatable")
                continue
            for part_name, part in [("covert", forgemod.extract_payload(data, loc)),
                                    ("overt", forgemod.strip_covert(data, loc))]:
                sha = sha256_hex(part)
                got = donor_role.get(sha)
                if got is None:
                    report.problems.append(f"{s.path}: {part_name} donor not in manifest")
                elif got is not want:
                    report.problems.append(
                        f"{s.path}: {part_name} donor has role {got}, expected {want}"
                    )
    return report
