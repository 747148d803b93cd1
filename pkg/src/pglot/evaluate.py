"""Metrics, detector benchmarking, and external-tool adapters.

PR-AUC uses the average-precision (step) formulation with ties grouped
at equal scores: walking distinct thresholds from high to low,
``auc = sum(delta_tp * precision) / positives``.  No trapezoidal
interpolation, so numbers are never optimistic between points.

Multi-label scoring is exact-set match: a prediction is a true
positive only when the predicted format set equals the truth set in
both membership and count.  A wrong non-empty prediction counts as
both a false positive and a false negative; an empty prediction only
as a false negative.
"""

from __future__ import annotations

import json
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from pglot.errors import NoPositives, ParseFailure, ToolMissing
from pglot.formats import FormatId
from pglot.corpus import Manifest, Role


def prf1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with the 0/0 -> 0 convention."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def pr_auc(scores: list[float], labels: list[int]) -> tuple[list[tuple[float, float]], float]:
    """PR curve points (recall-sorted) and average precision.

    Ties are grouped: every prediction sharing a score enters the
    ranking together, and each positive in the group contributes the
    group-boundary precision.
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    npos = sum(1 for l in labels if l)
    if npos == 0:
        raise NoPositives("PR-AUC needs at least one positive")
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    points: list[tuple[float, float]] = []
    auc = 0.0
    tp = fp = 0
    prev_tp = 0
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and scores[order[j]] == scores[order[i]]:
            if labels[order[j]]:
                tp += 1
            else:
                fp += 1
            j += 1
        precision = tp / (tp + fp)
        auc += (tp - prev_tp) * precision / npos
        points.append((tp / npos, precision))
        prev_tp = tp
        i = j
    return points, auc


@dataclass
class ExactMatchMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def multilabel_exact(preds: list[set], truths: list[set]) -> ExactMatchMetrics:
    """Exact-set matching over files (count and membership must agree)."""
    if len(preds) != len(truths):
        raise ValueError("prediction and truth lists must align")
    tp = fp = fn = 0
    for pred, truth in zip(preds, truths):
        if pred == truth:
            tp += 1
        else:
            fn += 1
            if pred:
                fp += 1
    p, r, f1 = prf1(tp, fp, fn)
    return ExactMatchMetrics(tp, fp, fn, p, r, f1)


# --- detector protocol ------------------------------------------------------

@dataclass(frozen=True)
class PredRecord:
    sha256: str
    truth: frozenset[FormatId]
    predicted_polyglot: bool
    score: float | None = None            # binary score when available
    predicted_labels: frozenset[FormatId] | None = None


class Detector:
    """A named thing that judges one file's bytes.

    Subclasses implement ``assess``; ``score`` is an optional binary
    polyglot probability, ``labels`` an optional format set.
    """

    name = "detector"

    def assess(self, data: bytes) -> tuple[bool, float | None, set[FormatId] | None]:
        raise NotImplementedError


@dataclass
class EvalReport:
    detector: str
    n: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    pr_points: list[tuple[float, float]] = field(default_factory=list)
    pr_auc: float | None = None
    multilabel_exact_f1: float | None = None
    confusion: dict = field(default_factory=dict)
    skipped: str | None = None

    def to_json(self) -> str:
        rec: dict = {"detector": self.detector}
        if self.skipped is not None:
            rec["skipped"] = self.skipped
            return json.dumps(rec, separators=(",", ":"))
        rec.update(precision=self.precision, recall=self.recall, f1=self.f1)
        if self.pr_auc is not None:
            rec["pr_auc"] = self.pr_auc
        if self.multilabel_exact_f1 is not None:
            rec["multilabel_exact_f1"] = self.multilabel_exact_f1
        rec["n"] = self.n
        rec["confusion"] = self.confusion
        return json.dumps(rec, separators=(",", ":"))


def evaluate_records(name: str, records: list[PredRecord]) -> EvalReport:
    """Binary polyglot metrics (plus PR-AUC and exact-set F1 when possible)."""
    report = EvalReport(name, n=len(records))
    tp = fp = fn = tn = 0
    for r in records:
        truth_poly = len(r.truth) > 1
        if r.predicted_polyglot and truth_poly:
            tp += 1
        elif r.predicted_polyglot:
            fp += 1
        elif truth_poly:
            fn += 1
        else:
            tn += 1
    report.precision, report.recall, report.f1 = prf1(tp, fp, fn)
    report.confusion = {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
    if all(r.score is not None for r in records) and records:
        scores = [float(r.score) for r in records]
        labels = [1 if len(r.truth) > 1 else 0 for r in records]
        if any(labels):
            report.pr_points, report.pr_auc = pr_auc(scores, labels)
    if all(r.predicted_labels is not None for r in records) and records:
        m = multilabel_exact([set(r.predicted_labels) for r in records],
                             [set(r.truth) for r in records])
        report.multilabel_exact_f1 = m.f1
    return report


def run_benchmark(manifest: Manifest, root: Path, detectors: list[Detector]) -> list[EvalReport]:
    """Evaluate every detector on the TEST split only.

    Per-detector failures (missing tool, crash) are recorded as skipped
    reports; the run continues.
    """
    test = manifest.by_role(Role.TEST)
    reports = []
    for det in detectors:
        try:
            records = []
            for s in test:
                data = (Path(root) / s.path).read_bytes()
                poly, score, labels = det.assess(data)
                records.append(PredRecord(
                    s.sha256, frozenset(s.labels), poly, score,
                    None if labels is None else frozenset(labels),
                ))
            reports.append(evaluate_records(det.name, records))
        except ToolMissing as exc:
            reports.append(EvalReport(det.name, skipped=str(exc)))
        except Exception as exc:  # keep the run alive; record the failure
            reports.append(EvalReport(det.name, skipped=f"failed: {exc}"))
    return reports


def save_reports(reports: list[EvalReport], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def format_table(reports: list[EvalReport]) -> str:
    rows = [f"{'detector':<18} {'precision':>9} {'recall':>9} {'f1':>9} "
            f"{'pr_auc':>9} {'exact_f1':>9}"]
    for r in reports:
        if r.skipped is not None:
            rows.append(f"{r.detector:<18} SKIPPED: {r.skipped}")
            continue
        auc = f"{r.pr_auc:9.5f}" if r.pr_auc is not None else "        -"
        ex = f"{r.multilabel_exact_f1:9.4f}" if r.multilabel_exact_f1 is not None else "        -"
        rows.append(f"{r.detector:<18} {r.precision:9.4f} {r.recall:9.4f} "
                    f"{r.f1:9.4f} {auc} {ex}")
    return "\n".join(rows)


# --- built-in detectors -----------------------------------------------------

class ConvDetector(Detector):
    """Byte-conv model; binary head scores, multi-label head labels."""

    def __init__(self, params, name: str = "conv"):
        from pglot.conv import Head
        self.params = params
        self.name = name
        self._binary = params.config.head is Head.BINARY

    def assess(self, data: bytes):
        from pglot import conv
        probs = conv.forward(self.params, data)
        if self._binary:
            score = float(probs[0])
            return score > 0.5, score, None
        from pglot.formats import ALL_FORMATS
        labels = {f for f, p in zip(ALL_FORMATS, probs) if p > 0.5}
        return len(labels) > 1, None, labels


class LinearDetector(Detector):
    def __init__(self, model, name: str = "linear"):
        from pglot.conv import Head
        self.model = model
        self.name = name
        self._binary = model.head is Head.BINARY

    def assess(self, data: bytes):
        from pglot import linear
        from pglot.features import featurize
        from pglot.formats import ALL_FORMATS
        p = linear.scores(self.model, featurize(data, self.model.spec))
        if self._binary:
            return float(p[0]) > 0.5, float(p[0]), None
        labels = {f for f, pi in zip(ALL_FORMATS, p) if pi > 0.5}
        return len(labels) > 1, None, labels


class RuleScanDetector(Detector):
    """The structural image scanner as a binary detector (images only)."""

    name = "rule-scan"

    def assess(self, data: bytes):
        from pglot.scan import verdict
        return not verdict(data).clean, None, None


class RecoveryDetector(Detector):
    """Ground-truth recovery (validate + locate) as a multi-label detector."""

    name = "recovery"

    def assess(self, data: bytes):
        from pglot.formats import recover_labels
        labels = recover_labels(data)
        return len(labels) > 1, None, labels


# --- external tools ---------------------------------------------------------

_MIME_MAP = {
    "image/png": FormatId.PNG,
    "image/jpeg": FormatId.JPEG,
    "image/gif": FormatId.GIF,
    "image/bmp": FormatId.BMP,
    "image/x-ms-bmp": FormatId.BMP,
    "application/zip": FormatId.ZIP,
    "application/java-archive": FormatId.JAR,
    "application/x-rar": FormatId.RAR,
    "application/x-rar-compressed": FormatId.RAR,
    "application/x-dosexec": FormatId.PE,
    "application/vnd.microsoft.portable-executable": FormatId.PE,
    "application/x-msdownload": FormatId.PE,
    "text/x-php": FormatId.PHP,
    "application/x-php": FormatId.PHP,
}

_BINWALK_MAP = (
    ("zip archive", FormatId.ZIP),
    ("end of zip archive", FormatId.ZIP),
    ("rar archive", FormatId.RAR),
    ("png image", FormatId.PNG),
    ("jpeg image", FormatId.JPEG),
    ("gif image", FormatId.GIF),
    ("pc bitmap", FormatId.BMP),
    ("microsoft executable", FormatId.PE),
    ("windows pe", FormatId.PE),
)


def _run_tool(argv: list[str], timeout: float = 30.0) -> str:
    if shutil.which(argv[0]) is None:
        raise ToolMissing(f"{argv[0]} is not installed")
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ParseFailure(f"{argv[0]} failed to run: {exc}") from exc
    return proc.stdout


def file_tool_labels(path: Path) -> set[FormatId]:
    """Map ``file --brief --mime-type`` output to a format set.

    Generic text labels map to no specific script format (the tool does
    not distinguish the script languages from plain text).
    """
    out = _run_tool(["file", "--brief", "--mime-type", str(path)]).strip().lower()
    if not out:
        raise ParseFailure("empty output from file", raw=out)
    fmt = _MIME_MAP.get(out)
    if fmt is not None:
        return {fmt}
    return set()


def binwalk_labels(path: Path) -> set[FormatId]:
    """Map ``binwalk`` signature lines to a format set."""
    out = _run_tool(["binwalk", str(path)])
    labels: set[FormatId] = set()
    for line in out.splitlines():
        low = line.lower()
        for needle, fmt in _BINWALK_MAP:
            if needle in low:
                labels.add(fmt)
    return labels


class FileToolDetector(Detector):
    name = "file"

    def __init__(self, workdir: Path):
        self.workdir = Path(workdir)

    def assess(self, data: bytes):
        tmp = self.workdir / "probe.bin"
        tmp.write_bytes(data)
        try:
            labels = file_tool_labels(tmp)
        finally:
            tmp.unlink(missing_ok=True)
        return len(labels) > 1, None, labels


class BinwalkDetector(FileToolDetector):
    name = "binwalk"

    def assess(self, data: bytes):
        tmp = self.workdir / "probe.bin"
        tmp.write_bytes(data)
        try:
            labels = binwalk_labels(tmp)
        finally:
            tmp.unlink(missing_ok=True)
        return len(labels) > 1, None, labels
