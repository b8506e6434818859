"""Synthetic Markush training samples: structure, description, drawing, OCR cells."""

from .augment import EmptyCorpus, Gates, augment_to_markush, ring_cycles, sample_base_molecules
from .config import GenConfig, ImageNoise, OcrNoise, load_config
from .describe import generate_description
from .lexicon import (
    Lexicon, MissingTemplateKind, TemplateSet, load_corpus, load_lexicon, load_templates,
)
from .noise import augment_image, augment_ocr_cells
from .pipeline import Pool, Sample, compose_sample, generate_dataset, generate_sample, sample_problems
from .render import (
    CanvasOverflow, DrawStyle, LayoutOverflow, OcrCell, draw_backbone, rasterize,
    render_backbone_svg,
)
from .stats import DatasetStats, dataset_stats

__all__ = [
    "CanvasOverflow", "DatasetStats", "DrawStyle", "EmptyCorpus", "GenConfig", "Gates",
    "ImageNoise", "LayoutOverflow", "Lexicon", "MissingTemplateKind", "OcrCell", "OcrNoise",
    "Pool", "Sample", "TemplateSet", "augment_image", "augment_ocr_cells", "augment_to_markush",
    "compose_sample", "dataset_stats", "draw_backbone", "generate_dataset", "generate_description",
    "generate_sample", "load_config", "load_corpus", "load_lexicon", "load_templates",
    "rasterize", "render_backbone_svg", "ring_cycles", "sample_base_molecules", "sample_problems",
]
