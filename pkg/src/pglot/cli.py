"""The ``pglot`` command: one entry point for every workflow.

Subcommands: identify, forge, dataset build|verify, train (conv or
linear), eval, scan, sanitize, bench-tools.  Machine output goes to
stdout as line-delimited records; diagnostics to stderr.  Exit codes:
0 success, 1 domain negative (e.g. scan found something), 2 usage or
IO error.

Every subcommand is a thin wrapper over the library; all randomness
flows from ``--seed``.  A ``--config`` file holds ``key = value``
lines mirroring the config dataclasses; command-line flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pglot.errors import PglotError

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PglotError(f"config line without '=': {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _cfg(args, filecfg: dict[str, str], name: str, cast, default):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in filecfg:
        return cast(filecfg[name])
    return default


# --- subcommand implementations --------------------------------------------

def _cmd_identify(args, filecfg) -> int:
    from pglot.formats import identify_first
    code = EXIT_OK
    for p in args.paths:
        try:
            fmt = identify_first(Path(p).read_bytes())
        except OSError as exc:
            print(f"error: {p}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        print(fmt if len(args.paths) == 1 else f"{p}\t{fmt}")
    return code


def _cmd_forge(args, filecfg) -> int:
    from pglot.forge import Method, Recipe, forge
    from pglot.formats import FormatId
    recipe = Recipe(FormatId.parse(args.covert), FormatId.parse(args.overt),
                    Method[args.method.upper()], seed=args.seed or 0)
    covert_bytes = Path(args.in_covert).read_bytes()
    overt_bytes = Path(args.in_overt).read_bytes()
    result = forge(recipe, covert_bytes, overt_bytes)
    Path(args.out).write_bytes(result.bytes)
    loc = result.covert_location
    print(json.dumps({"out": args.out, "covert": str(recipe.covert),
                      "overt": str(recipe.overt), "method": str(recipe.method),
                      "covert_offset": loc.start, "via": str(loc.via)},
                     separators=(",", ":")))
    return EXIT_OK


def _cmd_dataset_build(args, filecfg) -> int:
    from pglot.corpus import DatasetConfig, build_dataset
    cfg = DatasetConfig(
        monoglots_per_format=int(_cfg(args, filecfg, "monoglots_per_format", int, 50)),
        polyglots_per_pair=int(_cfg(args, filecfg, "polyglots_per_pair", int, 20)),
        donors_per_format=int(_cfg(args, filecfg, "donors_per_format", int, 12)),
        test_fraction=float(_cfg(args, filecfg, "test_fraction", float, 0.25)),
        min_size=int(_cfg(args, filecfg, "min_size", int, 512)),
        max_size=int(_cfg(args, filecfg, "max_size", int, 6144)),
    )
    manifest = build_dataset(Path(args.out), cfg, seed=args.seed or 0)
    poly = sum(1 for s in manifest.samples if s.is_polyglot)
    print(json.dumps({"manifest": str(Path(args.out) / "manifest.jsonl"),
                      "samples": len(manifest.samples), "polyglots": poly},
                     separators=(",", ":")))
    return EXIT_OK


def _cmd_dataset_verify(args, filecfg) -> int:
    from pglot.corpus import load_manifest, verify_holdout
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    report = verify_holdout(manifest, manifest_path.parent)
    for problem in report.problems:
        print(f"violation: {problem}", file=sys.stderr)
    print(json.dumps({"ok": report.ok, "violations": len(report.problems)},
                     separators=(",", ":")))
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def _train_targets(samples, head):
    from pglot import conv
    data = []
    for raw, s in samples:
        if head is conv.Head.BINARY:
            y = conv.binary_target(s.is_polyglot)
        else:
            y = conv.multilabel_target(s.labels)
        data.append((raw, y))
    return data


def _cmd_train(args, filecfg) -> int:
    from pglot import conv
    from pglot.corpus import Role, load_manifest, load_samples, verify_holdout
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    holdout = verify_holdout(manifest)
    if not holdout.ok:
        print("error: manifest fails holdout verification", file=sys.stderr)
        return EXIT_ERROR
    head = conv.Head.MULTILABEL if args.head == "multilabel" else conv.Head.BINARY
    samples = load_samples(manifest, root, Role.TRAIN)
    seed = args.seed or 0
    if args.model == "conv":
        cfg = conv.ConvNetConfig(
            max_len=int(_cfg(args, filecfg, "max_len", int, 16384)),
            filters=int(_cfg(args, filecfg, "filters", int, 128)),
            head=head,
            gated=bool(args.gated),
            window=512 if args.gated else 16,
            stride=512 if args.gated else 8,
            fc_sizes=(128,) if args.gated else (512, 512, 128),
        )
        tc = conv.TrainConfig(
            lr=float(_cfg(args, filecfg, "lr", float, 1e-3)),
            batch_size=int(_cfg(args, filecfg, "batch_size", int, 32)),
            epochs=int(_cfg(args, filecfg, "epochs", int, 8)),
            seed=seed,
        )
        params = conv.init(cfg, seed=seed)
        params, history = conv.train(params, _train_targets(samples, head), tc)
        conv.save(params, args.out)
    else:
        import numpy as np
        from pglot import linear
        from pglot.features import featurize_matrix, ngram_vocab
        spec = ngram_vocab([raw for raw, _ in samples],
                           int(_cfg(args, filecfg, "ngram_k", int, 2000)))
        x = featurize_matrix([raw for raw, _ in samples], spec)
        y = np.stack([t for _, t in _train_targets(samples, head)])
        lc = linear.LinearTrainConfig(
            lr=float(_cfg(args, filecfg, "lr", float, 0.5)),
            epochs=int(_cfg(args, filecfg, "epochs", int, 400)),
            l2=float(_cfg(args, filecfg, "l2", float, 1e-4)),
            seed=seed,
        )
        model, history = linear.train_linear(x, y, spec, head, lc)
        linear.save(model, args.out)
    for entry in history[-3:]:
        print(f"epoch {entry['epoch']}: loss {entry['loss']:.6f}", file=sys.stderr)
    print(json.dumps({"model": args.out, "epochs": len(history),
                      "final_loss": history[-1]["loss"]}, separators=(",", ":")))
    return EXIT_OK


def _cmd_eval(args, filecfg) -> int:
    from pglot import conv, linear
    from pglot.corpus import load_manifest
    from pglot.evaluate import (BinwalkDetector, ConvDetector, FileToolDetector,
                                LinearDetector, RecoveryDetector, RuleScanDetector,
                                format_table, run_benchmark, save_reports)
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    detectors = []
    for path in args.conv or []:
        params = conv.load(path)
        suffix = "multi" if params.config.head is conv.Head.MULTILABEL else "binary"
        detectors.append(ConvDetector(params, name=f"conv-{suffix}"))
    for path in args.linear or []:
        model = linear.load(path)
        suffix = "multi" if model.head is conv.Head.MULTILABEL else "binary"
        detectors.append(LinearDetector(model, name=f"linear-{suffix}"))
    if args.rules:
        detectors.append(RuleScanDetector())
    if args.recovery:
        detectors.append(RecoveryDetector())
    for tool in (args.tools.split(",") if args.tools else []):
        tool = tool.strip()
        if tool == "file":
            detectors.append(FileToolDetector(root))
        elif tool == "binwalk":
            detectors.append(BinwalkDetector(root))
        elif tool:
            print(f"warning: unknown tool {tool!r} ignored", file=sys.stderr)
    if not detectors:
        print("error: nothing to evaluate (pass --conv/--linear/--rules/--tools)",
              file=sys.stderr)
        return EXIT_ERROR
    reports = run_benchmark(manifest, root, detectors)
    if args.out:
        save_reports(reports, Path(args.out))
    print(format_table(reports), file=sys.stderr)
    for r in reports:
        print(r.to_json())
    return EXIT_OK


def _cmd_scan(args, filecfg) -> int:
    from pglot.scan import verdict
    worst = EXIT_OK
    for p in args.paths:
        try:
            data = Path(p).read_bytes()
        except OSError as exc:
            print(f"error: {p}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        v = verdict(data)
        print(json.dumps({
            "path": p,
            "verdict": v.label,
            "findings": [
                {"rule": f.rule, "offset": f.offset, "length": f.length,
                 "suspected": str(f.suspected) if f.suspected else None,
                 "severity": str(f.severity)}
                for f in v.findings
            ],
        }, separators=(",", ":")))
        if not v.clean:
            worst = EXIT_NEGATIVE
    return worst


def _cmd_sanitize(args, filecfg) -> int:
    from pglot.errors import InvalidImage, NotAnImage
    from pglot.sanitize import sanitize_image, verify_clean
    data = Path(args.infile).read_bytes()
    try:
        clean = sanitize_image(data)
    except (NotAnImage, InvalidImage) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    Path(args.outfile).write_bytes(clean)
    report = verify_clean(data, clean)
    print(json.dumps({"out": args.outfile, "bytes": len(clean),
                      "removed": len(data) - len(clean), "clean": report.ok},
                     separators=(",", ":")))
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def _cmd_bench_tools(args, filecfg) -> int:
    from pglot.corpus import load_manifest
    from pglot.evaluate import (BinwalkDetector, FileToolDetector, format_table,
                                run_benchmark, save_reports)
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent
    tools = (args.tools or "file,binwalk").split(",")
    detectors = []
    for tool in tools:
        tool = tool.strip()
        if tool == "file":
            detectors.append(FileToolDetector(root))
        elif tool == "binwalk":
            detectors.append(BinwalkDetector(root))
    reports = run_benchmark(manifest, root, detectors)
    if args.out:
        save_reports(reports, Path(args.out))
    print(format_table(reports), file=sys.stderr)
    for r in reports:
        print(r.to_json())
    return EXIT_OK


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    # Global flags live on the root parser and (via a SUPPRESS-default
    # parent) on every subcommand, so both positions work.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed for all randomness (default 0)")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="key = value config file; flags override")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="worker limit for subprocess-bound steps")

    parser = argparse.ArgumentParser(prog="pglot",
                                     description="polyglot file toolkit")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", default=None)
    parser.add_argument("--jobs", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("identify", help="print the first format of each file")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_identify)

    p = add_parser("forge", help="combine two donors into a polyglot")
    p.add_argument("--covert", required=True)
    p.add_argument("--overt", required=True)
    p.add_argument("--method", required=True, choices=["stack", "parasite"])
    p.add_argument("--in-covert", required=True, dest="in_covert")
    p.add_argument("--in-overt", required=True, dest="in_overt")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_forge)

    p = add_parser("dataset", help="build or verify a labeled corpus")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    b = dsub.add_parser("build", parents=[common])
    b.add_argument("--out", required=True)
    for flag in ("monoglots_per_format", "polyglots_per_pair", "donors_per_format",
                 "min_size", "max_size"):
        b.add_argument(f"--{flag.replace('_', '-')}", type=int, default=None, dest=flag)
    b.add_argument("--test-fraction", type=float, default=None, dest="test_fraction")
    b.set_defaults(func=_cmd_dataset_build)
    v = dsub.add_parser("verify", parents=[common])
    v.add_argument("manifest")
    v.set_defaults(func=_cmd_dataset_verify)

    p = add_parser("train", help="train a detector on a manifest")
    p.add_argument("--model", required=True, choices=["conv", "linear"])
    p.add_argument("--head", default="binary", choices=["binary", "multilabel"])
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--gated", action="store_true",
                   help="conv only: the wide-window gated comparison arm")
    for flag, cast in (("max_len", int), ("filters", int), ("epochs", int),
                       ("batch_size", int), ("ngram_k", int)):
        p.add_argument(f"--{flag.replace('_', '-')}", type=cast, default=None, dest=flag)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.set_defaults(func=_cmd_train)

    p = add_parser("eval", help="benchmark detectors on the TEST split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--conv", action="append", help="conv model file (repeatable)")
    p.add_argument("--linear", action="append", help="linear model file (repeatable)")
    p.add_argument("--rules", action="store_true", help="include the rule scanner")
    p.add_argument("--recovery", action="store_true",
                   help="include validate+locate ground-truth recovery")
    p.add_argument("--tools", default=None, help="comma list: file,binwalk")
    p.add_argument("--out", default=None, help="write line-delimited reports here")
    p.set_defaults(func=_cmd_eval)

    p = add_parser("scan", help="rule-scan images for extraneous content")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=_cmd_scan)

    p = add_parser("sanitize", help="rebuild an image from whitelisted structures")
    p.add_argument("infile")
    p.add_argument("outfile")
    p.set_defaults(func=_cmd_sanitize)

    p = add_parser("bench-tools", help="benchmark external tools only")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tools", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench_tools)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    filecfg = _load_config_file(args.config)
    try:
        return args.func(args, filecfg)
    except PglotError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
