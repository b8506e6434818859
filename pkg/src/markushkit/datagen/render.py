"""SVG depiction of Markush backbones with ground-truth OCR cells.

A :class:`Drawing` holds plain primitives (lines, circles, text runs) in
pixel coordinates. It can be written as SVG 1.1 or rasterized with Pillow,
and every text element doubles as one :class:`OcrCell`. Text is laid out
with per-family character-width factors and pinned with ``textLength`` so
the recorded boxes enclose the rendered glyphs.
"""

from __future__ import annotations

import math
import re
import textwrap
from dataclasses import dataclass, field, replace
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from ..chemgraph import BondOrder, kekule_assignment, total_hydrogens
from ..cxsmiles import MarkushStructure
from .augment import ring_cycles
from .config import GenConfig
from .layout import layout_markush

# (family, average character width as a fraction of the font size)
FONTS = (
    ("Arial", 0.58),
    ("Helvetica", 0.58),
    ("DejaVu Sans", 0.62),
    ("Times New Roman", 0.52),
    ("Courier New", 0.60),
    ("Verdana", 0.64),
)
MAX_ATOMS = 150
SMALL = 0.7  # relative size of sub/superscript runs
LINE_HEIGHT = 1.25


class LayoutOverflow(ValueError):
    pass


class CanvasOverflow(ValueError):
    pass


@dataclass(frozen=True)
class OcrCell:
    text: str
    bbox: tuple[int, int, int, int]  # x, y, width, height

    def __post_init__(self):
        bbox = tuple(int(v) for v in self.bbox)
        if len(bbox) != 4 or bbox[2] <= 0 or bbox[3] <= 0:
            raise ValueError(f"OCR cell box must have positive size, got {self.bbox}")
        object.__setattr__(self, "bbox", bbox)

    def translated(self, dx: int, dy: int) -> OcrCell:
        x, y, w, h = self.bbox
        return OcrCell(self.text, (x + dx, y + dy, w, h))

    def to_dict(self) -> dict:
        return {"text": self.text, "bbox": list(self.bbox)}

    @classmethod
    def from_dict(cls, d: dict) -> OcrCell:
        return cls(d["text"], tuple(d["bbox"]))


@dataclass(frozen=True)
class Line:
    x1: float
    y1: float
    x2: float
    y2: float
    width: float
    dashed: bool = False


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float
    width: float


@dataclass(frozen=True)
class Text:
    """Runs of (text, kind) with kind in normal/sub/sup, laid out from ``x``."""

    runs: tuple[tuple[str, str], ...]
    x: float
    y: float  # top of the box
    width: float
    font_size: float
    family: str

    @property
    def text(self) -> str:
        return "".join(t for t, _ in self.runs)

    @property
    def height(self) -> float:
        return self.font_size * LINE_HEIGHT

    def cell(self) -> OcrCell:
        x0, y0 = math.floor(self.x), math.floor(self.y)
        x1, y1 = math.ceil(self.x + self.width), math.ceil(self.y + self.height)
        return OcrCell(self.text, (x0, y0, max(1, x1 - x0), max(1, y1 - y0)))


def text_width(runs, font_size: float, family_index: int) -> float:
    factor = FONTS[family_index][1]
    total = 0.0
    for text, kind in runs:
        total += len(text) * factor * (SMALL if kind != "normal" else 1.0)
    return max(total, 0.3) * font_size


def _fmt(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


@dataclass
class Drawing:
    width: int
    height: int
    lines: list[Line] = field(default_factory=list)
    circles: list[Circle] = field(default_factory=list)
    texts: list[Text] = field(default_factory=list)

    @property
    def cells(self) -> list[OcrCell]:
        return [t.cell() for t in self.texts]

    def translated(self, dx: float, dy: float) -> Drawing:
        return Drawing(
            self.width, self.height,
            [Line(l.x1 + dx, l.y1 + dy, l.x2 + dx, l.y2 + dy, l.width, l.dashed) for l in self.lines],
            [Circle(c.cx + dx, c.cy + dy, c.r, c.width) for c in self.circles],
            [replace(t, x=t.x + dx, y=t.y + dy) for t in self.texts],
        )

    def to_svg(self) -> str:
        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            '<rect x="0" y="0" width="100%" height="100%" fill="white"/>',
            '<g stroke="black" stroke-linecap="round" fill="none">',
        ]
        for l in self.lines:
            dash = ' stroke-dasharray="3,3"' if l.dashed else ""
            out.append(f'<line x1="{_fmt(l.x1)}" y1="{_fmt(l.y1)}" x2="{_fmt(l.x2)}" '
                       f'y2="{_fmt(l.y2)}" stroke-width="{_fmt(l.width)}"{dash}/>')
        for c in self.circles:
            out.append(f'<circle cx="{_fmt(c.cx)}" cy="{_fmt(c.cy)}" r="{_fmt(c.r)}" '
                       f'stroke-width="{_fmt(c.width)}"/>')
        out.append("</g>")
        for t in self.texts:
            baseline = t.y + t.font_size * 0.95
            parts = []
            for text, kind in t.runs:
                if kind == "normal":
                    parts.append(escape(text))
                else:
                    parts.append(f'<tspan baseline-shift="{"sub" if kind == "sub" else "super"}" '
                                 f'font-size="{int(SMALL * 100)}%">{escape(text)}</tspan>')
            out.append(f'<text x="{_fmt(t.x)}" y="{_fmt(baseline)}" font-family={quoteattr(t.family)} '
                       f'font-size="{_fmt(t.font_size)}" textLength="{_fmt(t.width)}" '
                       f'lengthAdjust="spacingAndGlyphs">{"".join(parts)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# style

@dataclass(frozen=True)
class DrawStyle:
    font_family: int = 0
    font_size: float = 14.0
    bond_width: float = 1.5
    atom_spacing: float = 36.0
    superscript_indices: bool = False
    explicit_carbon: bool = False
    aromatic_circle: bool = False
    atom_numbers: bool = False
    parenthesized: frozenset[int] = frozenset()
    margin: float = 16.0

    def __post_init__(self):
        if not 0 <= self.font_family < len(FONTS):
            raise ValueError(f"font_family index {self.font_family} out of range")
        if self.font_size <= 0 or self.bond_width <= 0 or self.atom_spacing <= 0:
            raise ValueError("font size, bond width and spacing must be positive")

    @property
    def family(self) -> str:
        return FONTS[self.font_family][0]

    def to_dict(self) -> dict:
        return {
            "font_family": self.family, "font_size": self.font_size,
            "bond_width": self.bond_width, "atom_spacing": self.atom_spacing,
            "superscript_indices": self.superscript_indices,
            "explicit_carbon": self.explicit_carbon, "aromatic_circle": self.aromatic_circle,
            "atom_numbers": self.atom_numbers, "parenthesized": sorted(self.parenthesized),
        }


def sample_style(cfg: GenConfig, rng: np.random.Generator,
                 parenthesized: frozenset[int] = frozenset()) -> DrawStyle:
    return DrawStyle(
        font_family=int(rng.integers(len(FONTS))),
        font_size=round(float(rng.uniform(11.0, 18.0)), 1),
        bond_width=round(float(rng.uniform(1.0, 2.5)), 2),
        atom_spacing=round(float(rng.uniform(28.0, 46.0)), 1),
        superscript_indices=bool(rng.random() < cfg.p_superscript_indices),
        explicit_carbon=bool(rng.random() < cfg.p_explicit_carbon),
        aromatic_circle=bool(rng.random() < cfg.p_aromatic_circle),
        atom_numbers=bool(rng.random() < cfg.p_atom_numbers),
        parenthesized=parenthesized,
    )


# --------------------------------------------------------------------------
# backbone

_LABEL_RE = re.compile(r"^(.*?)(\d+)$")


def label_runs(label: str, superscript: bool) -> tuple[tuple[str, str], ...]:
    """``R12`` -> R + indexed 12; labels without trailing digits stay plain."""
    m = _LABEL_RE.match(label)
    if not m or not m.group(1):
        return ((label, "normal"),)
    return ((m.group(1), "normal"), (m.group(2), "sup" if superscript else "sub"))


def atom_runs(ms: MarkushStructure, i: int, style: DrawStyle, hydrogens: list[int],
              hidden: set[int]) -> tuple[tuple[str, str], ...] | None:
    """Text runs drawn at atom ``i``, or None for a bare vertex."""
    if i in hidden:
        return None
    atom = ms.graph.atoms[i]
    degree = ms.graph.degree(i)
    if atom.variable_label is not None:
        return label_runs(atom.variable_label, style.superscript_indices)
    if atom.element == "*":
        return (("*", "normal"),)
    plain_carbon = (atom.element == "C" and not atom.formal_charge and atom.isotope is None)
    if plain_carbon and not style.explicit_carbon and degree > 0:
        return None
    runs: list[tuple[str, str]] = []
    if atom.isotope is not None:
        runs.append((str(atom.isotope), "sup"))
    runs.append((atom.element, "normal"))
    h = hydrogens[i]
    if h:
        runs.append(("H", "normal"))
        if h > 1:
            runs.append((str(h), "sub"))
    if atom.formal_charge:
        mag = abs(atom.formal_charge)
        sign = "+" if atom.formal_charge > 0 else "-"
        runs.append(((str(mag) if mag > 1 else "") + sign, "sup"))
    if i in style.parenthesized:
        runs = [("(", "normal")] + runs + [(")", "normal")]
    return tuple(runs)


def _text_at(runs, cx: float, cy: float, size: float, style: DrawStyle) -> Text:
    w = text_width(runs, size, style.font_family)
    return Text(tuple(runs), cx - w / 2, cy - size * LINE_HEIGHT / 2, w, size, style.family)


def draw_backbone(ms: MarkushStructure, style: DrawStyle, rng: np.random.Generator | None = None,
                  max_canvas: int = 2400) -> Drawing:
    graph = ms.graph
    n = len(graph.atoms)
    if n > MAX_ATOMS:
        raise LayoutOverflow(f"{n} atoms exceed the layout limit of {MAX_ATOMS}")
    xy = layout_markush(ms)
    if rng is not None and n and rng.random() < 0.5:
        xy = xy * np.array([-1.0, 1.0])  # mirror for variety
    L = style.atom_spacing
    pts = np.column_stack([xy[:, 0] * L, -xy[:, 1] * L]) if n else np.zeros((0, 2))
    hidden = {pv.endpoint_atom for pv in ms.position_variations
              if graph.atoms[pv.endpoint_atom].element == "*"
              and graph.atoms[pv.endpoint_atom].variable_label is None}
    hydrogens = total_hydrogens(graph)
    for pv in ms.position_variations:
        # the drawn variable bond takes one hydrogen from its endpoint
        if hydrogens[pv.endpoint_atom]:
            hydrogens[pv.endpoint_atom] -= 1
    lines: list[Line] = []
    circles: list[Circle] = []
    texts: list[Text] = []
    radius: dict[int, float] = {}
    for i in range(n):
        runs = atom_runs(ms, i, style, hydrogens, hidden)
        if runs is None:
            continue
        t = _text_at(runs, pts[i, 0], pts[i, 1], style.font_size, style)
        texts.append(t)
        radius[i] = min(max(t.width, t.height) * 0.5 + 1.0, 0.42 * L)

    cycles = ring_cycles(graph)
    ring_center = {}
    for c in cycles:
        center = pts[c].mean(axis=0)
        for k, a in enumerate(c):
            b = c[(k + 1) % len(c)]
            ring_center.setdefault((min(a, b), max(a, b)), center)
    circled = set()
    if style.aromatic_circle:
        for c in cycles:
            if all(graph.atoms[a].is_aromatic for a in c) and all(
                    graph.bond_order(c[k], c[(k + 1) % len(c)]) == BondOrder.AROMATIC
                    for k in range(len(c))):
                center = pts[c].mean(axis=0)
                apo = min(float(np.linalg.norm(pts[a] - center)) for a in c)
                circles.append(Circle(center[0], center[1], apo * 0.62, style.bond_width))
                for k in range(len(c)):
                    a, b = c[k], c[(k + 1) % len(c)]
                    circled.add((min(a, b), max(a, b)))
    kek = kekule_assignment(graph)
    w = style.bond_width
    gap = 0.16 * L
    for bond in graph.bonds:
        a, b = bond.a, bond.b
        pa, pb = pts[a], pts[b]
        d = pb - pa
        length = float(np.linalg.norm(d))
        if length < 1e-6:
            continue
        u = d / length
        sa = radius.get(a, 0.0)
        sb = radius.get(b, 0.0)
        if sa + sb > length * 0.8:
            scale = length * 0.8 / (sa + sb)
            sa, sb = sa * scale, sb * scale
        p1 = pa + u * sa
        p2 = pb - u * sb
        order = bond.order
        key = (a, b)
        dashed_inner = False
        if order == BondOrder.AROMATIC:
            if key in circled:
                order = BondOrder.SINGLE
            elif key in kek:
                order = BondOrder(kek[key])
            else:
                order, dashed_inner = BondOrder.DOUBLE, True
        lines.append(Line(p1[0], p1[1], p2[0], p2[1], w))
        normal = np.array([-u[1], u[0]])
        if order == BondOrder.DOUBLE:
            center = ring_center.get(key)
            if center is not None:
                side = 1.0 if np.dot(center - (pa + pb) / 2, normal) > 0 else -1.0
                off = normal * gap * side
                q1 = p1 + u * 0.12 * length + off
                q2 = p2 - u * 0.12 * length + off
                lines.append(Line(q1[0], q1[1], q2[0], q2[1], w, dashed_inner))
            else:
                off = normal * gap
                lines.append(Line(p1[0] + off[0], p1[1] + off[1], p2[0] + off[0], p2[1] + off[1], w))
        elif order == BondOrder.TRIPLE:
            for s in (1.0, -1.0):
                off = normal * gap * s
                lines.append(Line(p1[0] + off[0], p1[1] + off[1], p2[0] + off[0], p2[1] + off[1], w))

    # position variation bonds reach into the ring centre
    for pv in ms.position_variations:
        center = pts[list(pv.candidate_atoms)].mean(axis=0)
        pe = pts[pv.endpoint_atom]
        v = center - pe
        if np.linalg.norm(v) < 1e-6:
            continue
        start = pe + v / np.linalg.norm(v) * radius.get(pv.endpoint_atom, 0.0)
        lines.append(Line(start[0], start[1], center[0], center[1], w))

    # repeat-unit brackets
    small = style.font_size * 0.85
    for fv in ms.frequency_variations:
        unit = set(fv.atoms)
        crossing = [(x, y) for x in fv.atoms for y, _ in graph.neighbors(x) if y not in unit]
        marks = []
        if crossing:
            for x, y in crossing:
                mid = (pts[x] + pts[y]) / 2
                d = pts[y] - pts[x]
                d = d / (np.linalg.norm(d) or 1.0)
                nrm = np.array([-d[1], d[0]])
                e1, e2 = mid + nrm * 0.3 * L, mid - nrm * 0.3 * L
                lines.append(Line(e1[0], e1[1], e2[0], e2[1], w))
                for e in (e1, e2):
                    hook = e - d * 0.12 * L
                    lines.append(Line(e[0], e[1], hook[0], hook[1], w))
                marks.append((e2, d))
        else:
            box = pts[list(fv.atoms)]
            lo = box.min(axis=0) - 0.45 * L
            hi = box.max(axis=0) + 0.45 * L
            for x, s in ((lo[0], 1.0), (hi[0], -1.0)):
                lines.append(Line(x, lo[1], x, hi[1], w))
                lines.append(Line(x, lo[1], x + s * 0.12 * L, lo[1], w))
                lines.append(Line(x, hi[1], x + s * 0.12 * L, hi[1], w))
            marks.append((np.array([hi[0], hi[1]]), np.array([1.0, 0.0])))
        if fv.label:
            anchor, d = max(marks, key=lambda m: (m[0][0], m[0][1]))
            t = _text_at(((fv.label, "normal"),), anchor[0] + d[0] * 0.25 * L + small * 0.4,
                         anchor[1] + small * 0.6, small, style)
            texts.append(t)

    if style.atom_numbers:
        tiny = style.font_size * 0.6
        for i in range(n):
            if i in hidden:
                continue
            texts.append(_text_at(((str(i), "normal"),), pts[i, 0] + 0.32 * L,
                                  pts[i, 1] - 0.32 * L, tiny, style))

    # frame everything with a margin
    xs = [v for l in lines for v in (l.x1, l.x2)] + [c.cx - c.r for c in circles] + \
         [c.cx + c.r for c in circles] + [t.x for t in texts] + [t.x + t.width for t in texts]
    ys = [v for l in lines for v in (l.y1, l.y2)] + [c.cy - c.r for c in circles] + \
         [c.cy + c.r for c in circles] + [t.y for t in texts] + [t.y + t.height for t in texts]
    if not xs:
        xs, ys = [0.0], [0.0]
    m = style.margin
    dx = m - math.floor(min(xs))
    dy = m - math.floor(min(ys))
    width = int(math.ceil(max(xs) + dx + m))
    height = int(math.ceil(max(ys) + dy + m))
    if width > max_canvas or height > max_canvas:
        raise LayoutOverflow(f"drawing of {width}x{height} px exceeds {max_canvas} px")
    return Drawing(width, height, lines, circles, texts).translated(dx, dy)


def render_backbone_svg(ms: MarkushStructure, style: DrawStyle, rng: np.random.Generator,
                        max_canvas: int = 2400) -> tuple[str, list[OcrCell]]:
    d = draw_backbone(ms, style, rng, max_canvas)
    return d.to_svg(), d.cells


# --------------------------------------------------------------------------
# description and collage

def draw_description(text: str, style: DrawStyle, rng: np.random.Generator,
                     max_canvas: int = 2400) -> Drawing | None:
    """Wrap ``text`` into lines, one text element (and OCR cell) per line."""
    if not text.strip():
        return None
    size = round(float(rng.uniform(11.0, 15.0)), 1)
    chars = int(rng.integers(40, 90))
    rows = textwrap.wrap(text, width=chars, break_long_words=False, break_on_hyphens=False)
    m = style.margin
    texts = []
    y = m
    for row in rows:
        runs = ((row, "normal"),)
        texts.append(Text(runs, m, y, text_width(runs, size, style.font_family), size, style.family))
        y += size * LINE_HEIGHT * 1.1
    width = int(math.ceil(max(t.x + t.width for t in texts) + m))
    height = int(math.ceil(y + m))
    if width > max_canvas or height > max_canvas:
        raise CanvasOverflow(f"description of {width}x{height} px exceeds {max_canvas} px")
    return Drawing(width, height, [], [], texts)


def collage(backbone: Drawing, description: Drawing | None, right: bool,
            max_canvas: int = 2400) -> tuple[Drawing, tuple[int, int]]:
    """Place ``description`` below or right of ``backbone``; returns the offset used."""
    if description is None:
        return backbone, (0, 0)
    if right:
        offset = (backbone.width, 0)
        width = backbone.width + description.width
        height = max(backbone.height, description.height)
    else:
        offset = (0, backbone.height)
        width = max(backbone.width, description.width)
        height = backbone.height + description.height
    if width > max_canvas or height > max_canvas:
        raise CanvasOverflow(f"composed image of {width}x{height} px exceeds {max_canvas} px")
    moved = description.translated(*offset)
    return Drawing(width, height, backbone.lines + moved.lines, backbone.circles + moved.circles,
                   backbone.texts + moved.texts), offset


# --------------------------------------------------------------------------
# raster

def rasterize(drawing: Drawing) -> np.ndarray:
    """Greyscale uint8 image (white background) of ``drawing`` at 1 px per unit."""
    from PIL import Image, ImageDraw, ImageFont

    img = Image.new("L", (drawing.width, drawing.height), 255)
    pen = ImageDraw.Draw(img)
    for l in drawing.lines:
        pen.line([(l.x1, l.y1), (l.x2, l.y2)], fill=0, width=max(1, round(l.width)))
    for c in drawing.circles:
        pen.ellipse([c.cx - c.r, c.cy - c.r, c.cx + c.r, c.cy + c.r], outline=0,
                    width=max(1, round(c.width)))
    fonts: dict[float, object] = {}
    for t in drawing.texts:
        size = max(6, round(t.font_size))
        if size not in fonts:
            fonts[size] = ImageFont.load_default(size=size)
        pen.text((t.x + t.width / 2, t.y + t.height / 2), t.text, fill=0,
                 font=fonts[size], anchor="mm")
    return np.asarray(img, dtype=np.uint8).copy()
