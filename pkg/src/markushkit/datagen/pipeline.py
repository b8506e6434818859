"""End-to-end sample generation: molecule, Markush features, text, drawing."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..chemgraph import MolecularGraph, SmilesError, parse_smiles, valence_errors
from ..cxsmiles import (
    MarkushStructure, canonical_cxsmiles, canonicalize_markush, markush_equal, parse_cxsmiles,
    write_cxsmiles,
)
from ..markushrepr import (
    LabelNotInStructure, SubstituentTable, decode_optimized, encode_optimized_text,
)
from .augment import EmptyCorpus, Gates, augment_to_markush, max_min_indices, sample_parentheses
from .config import GenConfig
from .describe import generate_description
from .lexicon import Lexicon, TemplateSet
from .noise import augment_image, augment_ocr_cells
from .render import (
    CanvasOverflow, Drawing, DrawStyle, LayoutOverflow, OcrCell, collage, draw_backbone,
    draw_description, rasterize, sample_style,
)

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 3
# optional hook: (description, table) -> description with the same table
Paraphraser = Callable[[str, SubstituentTable], str]


@dataclass
class Sample:
    id: str
    cxsmiles: str
    optimized: str
    description: str
    table: SubstituentTable
    ocr_cells: list[OcrCell]
    svg: str | None
    provenance: dict
    structure: MarkushStructure = field(repr=False)
    drawing: Drawing | None = field(default=None, repr=False)
    style: DrawStyle | None = field(default=None, repr=False)
    pixels: np.ndarray | None = field(default=None, repr=False)

    def to_record(self, image_path: str | None = None) -> dict:
        return {
            "id": self.id,
            "cxsmiles": self.cxsmiles,
            "optimized": self.optimized,
            "description": self.description,
            "table": self.table.to_dict(),
            "ocr_cells": [c.to_dict() for c in self.ocr_cells],
            "image_path": image_path,
        }


def sample_problems(sample: Sample) -> list[str]:
    """Empty when the sample meets every validity invariant."""
    out = []
    ms = sample.structure
    if valence_errors(ms.graph):
        out.append(f"valence: {valence_errors(ms.graph)}")
    try:
        again = parse_cxsmiles(write_cxsmiles(parse_cxsmiles(sample.cxsmiles)))
        if not markush_equal(again, ms) or canonical_cxsmiles(again) != sample.cxsmiles:
            out.append("cxsmiles round-trip changed the structure")
    except ValueError as exc:
        out.append(f"cxsmiles round-trip failed: {exc}")
    decoded = decode_optimized(sample.optimized)
    if decoded.diagnostics:
        out.append(f"optimized decode: {[str(d) for d in decoded.diagnostics]}")
    elif not markush_equal(decoded.structure, ms) or not decoded.table.same_content(sample.table):
        out.append("optimized round-trip changed the sample")
    missing = (set(ms.labels) | set(ms.frequency_labels)) - set(sample.table)
    if missing:
        out.append(f"labels without table entry: {sorted(missing)}")
    return out


def _encode_quietly(ms: MarkushStructure, table: SubstituentTable) -> str:
    # noise labels are meant to be absent from the structure
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelNotInStructure)
        return encode_optimized_text(ms, table)


def compose_sample(backbone: Drawing, description: Drawing | None, rng: np.random.Generator, *,
                   sample_id: str, structure: MarkushStructure, table: SubstituentTable,
                   description_text: str, provenance: dict, cfg: GenConfig,
                   style: DrawStyle | None = None) -> Sample:
    """Collate backbone and description drawings into one training sample."""
    right = description is not None and bool(rng.random() < cfg.p_description_right)
    drawing, _ = collage(backbone, description, right, cfg.max_canvas)
    return Sample(
        id=sample_id,
        cxsmiles=canonical_cxsmiles(structure),
        optimized=_encode_quietly(structure, table),
        description=description_text,
        table=table,
        ocr_cells=drawing.cells,
        svg=drawing.to_svg(),
        provenance=provenance,
        structure=structure,
        drawing=drawing,
        style=style,
    )


def sample_rng(seed: int, index: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index, *stream]))


@dataclass(frozen=True)
class Pool:
    """Diversity-selected base molecules shared by every sample."""

    ids: tuple[str, ...]
    graphs: tuple[MolecularGraph, ...]
    gates: Gates

    @classmethod
    def build(cls, corpus: Sequence[tuple[str, str]], cfg: GenConfig) -> Pool:
        if not corpus:
            raise EmptyCorpus("corpus is empty")
        graphs = []
        for mol_id, smi in corpus:
            try:
                g = parse_smiles(smi)
            except SmilesError as exc:
                raise ValueError(f"corpus molecule {mol_id}: {exc}") from None
            if valence_errors(g):
                raise ValueError(f"corpus molecule {mol_id} has valence errors")
            graphs.append(g)
        size = min(cfg.pool_size, len(graphs)) or len(graphs)
        picks = max_min_indices(graphs, size, sample_rng(cfg.seed, 0, 0xD1))
        chosen = [graphs[i] for i in picks]
        return cls(tuple(corpus[i][0] for i in picks), tuple(chosen),
                   Gates.calibrated(cfg, chosen))


def generate_sample(index: int, pool: Pool, cfg: GenConfig, templates: TemplateSet,
                    lex: Lexicon, raster: bool = False,
                    paraphrase: Paraphraser | None = None) -> Sample:
    """Sample ``index`` of the dataset; depends only on (seed, index, inputs)."""
    last: Exception | None = None
    for attempt in range(MAX_ATTEMPTS):
        rng = sample_rng(cfg.seed, index, attempt)
        k = int(rng.integers(len(pool.graphs)))
        ms = augment_to_markush(pool.graphs[k], cfg, lex, rng, pool.gates)
        ms = canonicalize_markush(ms)
        text, table = generate_description(ms, templates, lex, rng, cfg)
        if paraphrase is not None and rng.random() < cfg.paraphrase_fraction:
            text = paraphrase(text, table)
        style = sample_style(cfg, rng, sample_parentheses(ms, cfg, rng))
        try:
            backbone = draw_backbone(ms, style, rng, cfg.max_canvas)
            desc = draw_description(text, style, rng, cfg.max_canvas)
            sample = compose_sample(
                backbone, desc, rng, sample_id=f"s{index:06d}", structure=ms, table=table,
                description_text=text, cfg=cfg, style=style,
                provenance={"seed": cfg.seed, "index": index, "attempt": attempt,
                            "base_molecule": pool.ids[k]},
            )
        except (LayoutOverflow, CanvasOverflow) as exc:
            last = exc
            continue
        noise_rng = sample_rng(cfg.seed, index, attempt, 1)
        cells = sample.ocr_cells
        if raster:
            pixels = rasterize(sample.drawing)
            pixels, cells = augment_image(pixels, cfg.image_noise, noise_rng, cells)
            sample.pixels = pixels
        sample.ocr_cells = augment_ocr_cells(cells, cfg.ocr_noise, noise_rng)
        return sample
    raise last if last else RuntimeError("sample generation failed")


def _worker(args):
    index, pool, cfg, templates, lex, raster = args
    try:
        return generate_sample(index, pool, cfg, templates, lex, raster), None
    except (LayoutOverflow, CanvasOverflow, ValueError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def generate_dataset(corpus: Sequence[tuple[str, str]], cfg: GenConfig, templates: TemplateSet,
                     lex: Lexicon, n: int, raster: bool = False, workers: int = 1
                     ) -> tuple[list[Sample], dict[int, str]]:
    """``n`` samples in index order plus {index: reason} for skipped ones.

    Output does not depend on ``workers``: each sample owns its rng stream.
    """
    pool = Pool.build(corpus, cfg)
    jobs = [(i, pool, cfg, templates, lex, raster) for i in range(n)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_worker, jobs, chunksize=16))
    else:
        results = [_worker(j) for j in jobs]
    samples, failures = [], {}
    for i, (sample, err) in enumerate(results):
        if sample is None:
            log.warning("sample %d skipped: %s", i, err)
            failures[i] = err
        else:
            samples.append(sample)
    return samples, failures
