"""Training-time perturbations of OCR cells and rasterized images."""

from __future__ import annotations

import string
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw, ImageFilter

from .config import ImageNoise, OcrNoise
from .render import OcrCell

OCR_OPERATIONS = ("substitution", "insertion", "deletion", "transposition", "case", "shift")
IMAGE_OPERATIONS = ("shift", "scale", "downscale", "blur", "pepper", "lines")
_ALPHABET = string.ascii_letters + string.digits + "()-,."


def _other_char(c: str, rng: np.random.Generator) -> str:
    pool = _ALPHABET.replace(c, "")
    return pool[int(rng.integers(len(pool)))]


def augment_ocr_cells(cells: Sequence[OcrCell], cfg: OcrNoise, rng: np.random.Generator,
                      log: list[tuple[int, str]] | None = None) -> list[OcrCell]:
    """Perturb OCR text and boxes; each operation fires per cell with its probability.

    A Bernoulli draw is made for every (cell, operation) pair regardless of
    whether the operation can apply, so the random stream does not depend on
    the text. Applied operations are appended to ``log`` as (cell, name).
    """
    probs = (cfg.p_substitution, cfg.p_insertion, cfg.p_deletion,
             cfg.p_transposition, cfg.p_case, cfg.p_shift)
    out = []
    for k, cell in enumerate(cells):
        text = cell.text
        x, y, w, h = cell.bbox
        fire = rng.random(len(OCR_OPERATIONS)) < np.array(probs)
        for op, on in zip(OCR_OPERATIONS, fire):
            if not on:
                continue
            applied = True
            if op == "substitution" and text:
                i = int(rng.integers(len(text)))
                text = text[:i] + _other_char(text[i], rng) + text[i + 1:]
            elif op == "insertion":
                i = int(rng.integers(len(text) + 1))
                text = text[:i] + _ALPHABET[int(rng.integers(len(_ALPHABET)))] + text[i:]
            elif op == "deletion" and len(text) >= 2:
                i = int(rng.integers(len(text)))
                text = text[:i] + text[i + 1:]
            elif op == "transposition" and len(text) >= 2:
                i = int(rng.integers(len(text) - 1))
                text = text[:i] + text[i + 1] + text[i] + text[i + 2:]
            elif op == "case" and any(c.isalpha() for c in text):
                letters = [i for i, c in enumerate(text) if c.isalpha()]
                i = letters[int(rng.integers(len(letters)))]
                text = text[:i] + text[i].swapcase() + text[i + 1:]
            elif op == "shift":
                dx, dy = (int(v) for v in rng.integers(-cfg.max_shift, cfg.max_shift + 1, size=2))
                x, y = x + dx, y + dy
            else:
                applied = False
            if applied and log is not None:
                log.append((k, op))
        out.append(OcrCell(text, (x, y, w, h)))
    return out


def _scale_cells(cells, sx: float, sy: float) -> list[OcrCell]:
    out = []
    for c in cells:
        x, y, w, h = c.bbox
        out.append(OcrCell(c.text, (round(x * sx), round(y * sy),
                                    max(1, round(w * sx)), max(1, round(h * sy)))))
    return out


def shift_image(img: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Translate with white fill; content leaving the frame is dropped."""
    out = np.full_like(img, 255)
    h, w = img.shape[:2]
    src = img[max(0, -dy):h - max(0, dy), max(0, -dx):w - max(0, dx)]
    out[max(0, dy):max(0, dy) + src.shape[0], max(0, dx):max(0, dx) + src.shape[1]] = src
    return out


def pepper(img: np.ndarray, rate: float, patches: int, size: int,
           rng: np.random.Generator) -> tuple[np.ndarray, int, int]:
    """Darken exactly round(rate * area) pixels inside random square patches.

    Returns (image, darkened pixel count, patch area).
    """
    h, w = img.shape[:2]
    mask = np.zeros((h, w), dtype=bool)
    size = max(1, min(size, h, w))
    for _ in range(patches):
        y0 = int(rng.integers(0, h - size + 1))
        x0 = int(rng.integers(0, w - size + 1))
        mask[y0:y0 + size, x0:x0 + size] = True
    idx = np.flatnonzero(mask)
    k = int(round(rate * len(idx)))
    chosen = rng.choice(idx, size=k, replace=False) if k else np.array([], dtype=int)
    out = img.copy()
    out.reshape(-1)[chosen] = 0
    return out, k, len(idx)


def augment_image(raster: np.ndarray, cfg: ImageNoise, rng: np.random.Generator,
                  cells: Sequence[OcrCell] = (), log: list[str] | None = None
                  ) -> tuple[np.ndarray, list[OcrCell]]:
    """Apply the six raster perturbations; boxes follow shift and scale.

    Returns the new greyscale buffer (its shape is the recorded output size)
    and the transformed cells.
    """
    img = np.asarray(raster, dtype=np.uint8)
    cells = list(cells)
    probs = (cfg.p_shift, cfg.p_scale, cfg.p_downscale, cfg.p_blur, cfg.p_pepper, cfg.p_lines)
    fire = rng.random(len(IMAGE_OPERATIONS)) < np.array(probs)
    for op, on in zip(IMAGE_OPERATIONS, fire):
        if not on:
            continue
        if op == "shift":
            dx, dy = (int(v) for v in rng.integers(-cfg.max_shift, cfg.max_shift + 1, size=2))
            img = shift_image(img, dx, dy)
            cells = [c.translated(dx, dy) for c in cells]
        elif op == "scale":
            s = float(rng.uniform(*cfg.scale_range))
            h, w = img.shape
            nw, nh = max(1, round(w * s)), max(1, round(h * s))
            img = np.asarray(Image.fromarray(img).resize((nw, nh), Image.BILINEAR))
            cells = _scale_cells(cells, nw / w, nh / h)
        elif op == "downscale":
            s = float(rng.uniform(*cfg.downscale_range))
            h, w = img.shape
            small = Image.fromarray(img).resize((max(1, round(w * s)), max(1, round(h * s))),
                                                Image.BILINEAR)
            img = np.asarray(small.resize((w, h), Image.BILINEAR))
        elif op == "blur":
            sigma = float(rng.uniform(*cfg.blur_sigma))
            img = np.asarray(Image.fromarray(img).filter(ImageFilter.GaussianBlur(sigma)))
        elif op == "pepper":
            img, _, _ = pepper(img, cfg.pepper_rate, cfg.pepper_patches, cfg.pepper_patch_size, rng)
        elif op == "lines":
            pil = Image.fromarray(img)
            pen = ImageDraw.Draw(pil)
            h, w = img.shape
            for _ in range(int(rng.integers(1, cfg.max_lines + 1))):
                x0, x1 = (int(v) for v in rng.integers(0, w, size=2))
                y0, y1 = (int(v) for v in rng.integers(0, h, size=2))
                pen.line([(x0, y0), (x1, y1)], fill=0, width=int(rng.integers(1, 3)))
            img = np.asarray(pil)
        if log is not None:
            log.append(op)
    return np.array(img, dtype=np.uint8), cells
