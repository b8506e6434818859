"""Show what the OCR and image perturbations do to one drawing.

Run: python3 demos/noise.py [out_dir]
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from markushkit.cxsmiles import parse_cxsmiles
from markushkit.datagen import (
    DrawStyle, ImageNoise, OcrNoise, augment_image, augment_ocr_cells, draw_backbone, rasterize,
)


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
    out.mkdir(parents=True, exist_ok=True)
    ms = parse_cxsmiles("*c1ccc(N(C)C(=O)*)cc1 |$R1;;;;;;;;;R12;;$|")
    drawing = draw_backbone(ms, DrawStyle(font_size=16), np.random.default_rng(0))
    rng = np.random.default_rng(1)

    log: list = []
    noisy = augment_ocr_cells(drawing.cells, OcrNoise.uniform(0.3), rng, log)
    print("OCR cells before/after")
    for before, after in zip(drawing.cells, noisy):
        print(f"  {before.text!r:8} {before.bbox}  ->  {after.text!r:8} {after.bbox}")
    print("operations applied:", log)

    clean = rasterize(drawing)
    cfg = ImageNoise(p_shift=1.0, p_blur=1.0, p_pepper=1.0, p_lines=1.0)
    img_log: list = []
    dirty, _ = augment_image(clean, cfg, rng, drawing.cells, img_log)
    Image.fromarray(clean).save(out / "clean.png")
    Image.fromarray(dirty).save(out / "augmented.png")
    print("image operations:", img_log)
    print("written:", out / "clean.png", out / "augmented.png")


if __name__ == "__main__":
    main()
