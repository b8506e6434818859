"""Command-line interface: ``markushkit {parse,convert,render,generate,evaluate,stats}``.

Exit codes: 0 success, 1 data error, 2 I/O or environment error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from pathlib import Path
from typing import Iterable, TextIO

from .chemgraph import SmilesError, valence_errors
from .cxsmiles import CxsmilesError, canonical_cxsmiles, canonicalize_markush, parse_cxsmiles
from .markushrepr import (
    LabelNotInStructure, SubstituentTable, decode_optimized, encode_optimized_text,
)
from .metrics import evaluate_pair, aggregate, read_structure

EXIT_OK, EXIT_DATA, EXIT_IO = 0, 1, 2
SEED_ENV = "MARKUSHKIT_SEED"
DATASET_FILE = "dataset.jsonl"
MANIFEST_FILE = "manifest.json"

log = logging.getLogger("markushkit")


class DataError(Exception):
    """Bad input content (exit code 1)."""


# --------------------------------------------------------------------------
# JSON lines

def dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def read_jsonl(path: str | Path) -> list[dict]:
    """Records of a JSON-lines file; blank lines are skipped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc.msg}") from None
            if not isinstance(rec, dict):
                raise DataError(f"{path}:{lineno}: record is not an object")
            out.append(rec)
    return out


def write_jsonl(records: Iterable[dict], fh: TextIO) -> None:
    for rec in records:
        fh.write(dump_record(rec) + "\n")


def _open_in(path: str | None) -> TextIO:
    return sys.stdin if path in (None, "-") else open(path, encoding="utf-8")


def _open_out(path: str | None) -> TextIO:
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")


# --------------------------------------------------------------------------
# commands

def cmd_parse(args) -> int:
    with _open_in(args.input) as fh:
        lines = fh.read().splitlines()
    bad = 0
    for line in lines:
        text = line.strip()
        if not text:
            continue
        try:
            ms = parse_cxsmiles(text)
        except (SmilesError, CxsmilesError, ValueError) as exc:
            bad += 1
            print(f"ERROR\t{type(exc).__name__}: {exc}\t{text}")
            continue
        problems = valence_errors(ms.graph) if args.validate else []
        if problems:
            bad += 1
            detail = "; ".join(f"atom {i}: {msg}" for i, msg in problems)
            print(f"ERROR\tValenceError: {detail}\t{text}")
            continue
        print(f"OK\t{canonical_cxsmiles(ms) if args.canonical else text}")
    return EXIT_DATA if bad else EXIT_OK


def convert_record(record: dict, target: str) -> tuple[dict, list[str]]:
    """Add/overwrite the ``target`` representation; returns (record, problems)."""
    out = dict(record)
    if target == "optimized":
        if "cxsmiles" not in record:
            return out, ["record has no 'cxsmiles' field"]
        try:
            ms = parse_cxsmiles(record["cxsmiles"])
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LabelNotInStructure)
                out["optimized"] = encode_optimized_text(canonicalize_markush(ms),
                                                         SubstituentTable(record.get("table") or {}))
        except (SmilesError, CxsmilesError, ValueError) as exc:
            return dict(record), [f"{type(exc).__name__}: {exc}"]
        return out, []
    if "optimized" not in record:
        return out, ["record has no 'optimized' field"]
    result = decode_optimized(record["optimized"])
    if result.diagnostics:
        return dict(record), [str(d) for d in result.diagnostics]
    out["cxsmiles"] = canonical_cxsmiles(result.structure)
    out["table"] = result.table.to_dict()
    return out, []


def cmd_convert(args) -> int:
    try:
        with _open_in(args.input) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    records, failed = [], 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            print(f"line {lineno}: invalid JSON: {exc.msg}", file=sys.stderr)
            failed += 1
            continue
        rec, problems = convert_record(rec, args.to)
        if problems:
            failed += 1
            for p in problems:
                print(f"line {lineno} ({rec.get('id', '?')}): {p}", file=sys.stderr)
        records.append(rec)
    try:
        with _open_out(args.output) as fh:
            write_jsonl(records, fh)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_DATA if failed else EXIT_OK


def cmd_render(args) -> int:
    import numpy as np

    from .datagen.render import DrawStyle, LayoutOverflow, draw_backbone

    try:
        ms = parse_cxsmiles(args.cxsmiles)
        drawing = draw_backbone(ms, DrawStyle(), np.random.default_rng(args.seed))
    except (SmilesError, CxsmilesError, LayoutOverflow, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        with _open_out(args.out) as fh:
            fh.write(drawing.to_svg())
        if args.cells:
            with open(args.cells, "w", encoding="utf-8") as fh:
                json.dump([c.to_dict() for c in drawing.cells], fh, indent=1)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _seed_override(cfg):
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return cfg
    try:
        return cfg.with_seed(int(raw))
    except ValueError:
        raise DataError(f"{SEED_ENV}={raw!r} is not a valid seed") from None


def cmd_generate(args) -> int:
    from PIL import Image

    from .datagen import (
        EmptyCorpus, GenConfig, generate_dataset, load_config, load_corpus, load_lexicon,
        load_templates,
    )
    from .datagen.config import ConfigError
    from .datagen.lexicon import LexiconError, TemplateError

    try:
        cfg = load_config(args.config) if args.config else GenConfig()
        cfg = _seed_override(cfg)
        corpus = load_corpus(args.corpus)
        templates = load_templates(args.templates)
        lexicon = load_lexicon(args.lexicon)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, LexiconError, TemplateError, DataError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        samples, failures = generate_dataset(corpus, cfg, templates, lexicon, args.n,
                                             raster=args.raster, workers=args.workers)
    except EmptyCorpus as exc:
        print(f"error: EmptyCorpus: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA

    out = Path(args.out)
    try:
        (out / "svg").mkdir(parents=True, exist_ok=True)
        if args.raster:
            (out / "images").mkdir(exist_ok=True)
        digest = hashlib.sha256()
        with open(out / DATASET_FILE, "w", encoding="utf-8") as fh:
            for s in samples:
                (out / "svg" / f"{s.id}.svg").write_text(s.svg, encoding="utf-8")
                image_path = f"svg/{s.id}.svg"
                if args.raster:
                    image_path = f"images/{s.id}.png"
                    Image.fromarray(s.pixels).save(out / image_path)
                line = dump_record(s.to_record(image_path)) + "\n"
                digest.update(line.encode("utf-8"))
                fh.write(line)
        manifest = {
            "config_sha256": cfg.digest(),
            "seed": cfg.seed,
            "n_requested": args.n,
            "n_written": len(samples),
            "n_failed": len(failures),
            "failures": {str(k): v for k, v in sorted(failures.items())},
            "dataset_sha256": digest.hexdigest(),
            "raster": bool(args.raster),
            "config": cfg.to_dict(),
        }
        with open(out / MANIFEST_FILE, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(samples)} samples to {out / DATASET_FILE} ({len(failures)} skipped)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        preds = read_jsonl(args.pred)
        gts = read_jsonl(args.gt)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    gt_ids = [str(r.get("id")) for r in gts]
    pred_by_id = {}
    for r in preds:
        pred_by_id[str(r.get("id"))] = r
    if len(set(gt_ids)) != len(gt_ids) or set(pred_by_id) != set(gt_ids) or len(pred_by_id) != len(preds):
        missing = sorted(set(gt_ids) - set(pred_by_id))
        extra = sorted(set(pred_by_id) - set(gt_ids))
        print(f"error: id mismatch (missing predictions: {missing[:5]}, unknown ids: {extra[:5]}, "
              f"or duplicate ids)", file=sys.stderr)
        return EXIT_DATA
    results = []
    for gt in gts:
        try:
            _, _, problems = read_structure(gt)
        except (SmilesError, CxsmilesError, ValueError) as exc:
            print(f"error: ground truth {gt.get('id')}: {exc}", file=sys.stderr)
            return EXIT_DATA
        if problems:
            print(f"error: ground truth {gt.get('id')}: {'; '.join(problems)}", file=sys.stderr)
            return EXIT_DATA
        results.append(evaluate_pair(pred_by_id[str(gt.get("id"))], gt))
    report = aggregate(results)
    try:
        if args.report:
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(report.to_dict(), fh, indent=1)
                fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(report.summary())
    return EXIT_OK


def cmd_stats(args) -> int:
    from .datagen.stats import dataset_stats

    try:
        records = read_jsonl(args.input)
        stats = dataset_stats(records)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DataError, SmilesError, CxsmilesError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(json.dumps(stats.to_dict(), indent=1) if args.json else stats.format_table())
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markushkit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse CXSMILES lines and report problems")
    sp.add_argument("input", nargs="?", default="-", help="file with one CXSMILES per line (default stdin)")
    sp.add_argument("--validate", action="store_true", help="also check valences")
    sp.add_argument("--canonical", action="store_true", help="print the canonical form")
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("convert", help="convert JSONL records between representations")
    sp.add_argument("--to", required=True, choices=("optimized", "cxsmiles"))
    sp.add_argument("input", nargs="?", default="-")
    sp.add_argument("output", nargs="?", default="-")
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("render", help="draw one CXSMILES as SVG")
    sp.add_argument("cxsmiles")
    sp.add_argument("--out", default="-")
    sp.add_argument("--cells", help="write OCR cells as JSON to this file")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("generate", help="generate a synthetic dataset")
    sp.add_argument("--config", help="JSON config (defaults when omitted)")
    sp.add_argument("--corpus", help="SMILES file (bundled corpus when omitted)")
    sp.add_argument("--templates", help="template directory (bundled when omitted)")
    sp.add_argument("--lexicon", help="lexicon file (bundled when omitted)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--raster", action="store_true", help="also write augmented PNG images")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("evaluate", help="score predictions against ground truth")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--gt", required=True)
    sp.add_argument("--report", help="write the full JSON report here")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("stats", help="dataset statistics")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
