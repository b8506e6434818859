"""Generate a small synthetic set, fake a flawed model, and score it.

Run: python3 demos/generate_and_score.py [out_dir]
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from markushkit.cxsmiles import MarkushStructure, canonical_cxsmiles, parse_cxsmiles
from markushkit.datagen import (
    GenConfig, dataset_stats, generate_dataset, load_corpus, load_lexicon, load_templates,
)
from markushkit.metrics import evaluate_dataset


def flawed_prediction(record: dict, k: int) -> dict:
    """Every third prediction forgets a table entry, every fifth drops a feature."""
    pred = {"id": record["id"], "cxsmiles": record["cxsmiles"], "table": dict(record["table"])}
    if k % 3 == 0 and pred["table"]:
        pred["table"].pop(sorted(pred["table"])[0])
    if k % 5 == 0:
        ms = parse_cxsmiles(record["cxsmiles"])
        if ms.frequency_variations:
            ms = MarkushStructure(ms.graph, ms.variable_groups, ms.position_variations, ())
            pred["cxsmiles"] = canonical_cxsmiles(ms)
    return pred


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
    cfg = GenConfig(seed=7)
    samples, failures = generate_dataset(load_corpus(), cfg, load_templates(), load_lexicon(), n=60)
    print(f"{len(samples)} samples, {len(failures)} skipped")
    print(dataset_stats(samples).format_table())

    first = samples[0]
    print("\nexample sample", first.id)
    print("  cxsmiles   ", first.cxsmiles)
    print("  description", first.description[:120] + ("..." if len(first.description) > 120 else ""))
    print("  ocr cells  ", [c.text for c in first.ocr_cells][:10])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{first.id}.svg").write_text(first.svg)
    print("  drawing    ", out / f"{first.id}.svg")

    records = [s.to_record() for s in samples]
    report = evaluate_dataset([(flawed_prediction(r, k), r) for k, r in enumerate(records)])
    print("\nscores of the flawed predictor")
    print(report.summary())


if __name__ == "__main__":
    main()
