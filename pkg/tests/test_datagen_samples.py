from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from markushkit.cxsmiles import canonicalize_markush, parse_cxsmiles
from markushkit.datagen import (
    DrawStyle, GenConfig, ImageNoise, MissingTemplateKind, OcrCell, OcrNoise, Pool, TemplateSet,
    augment_image, augment_ocr_cells, dataset_stats, draw_backbone, generate_dataset,
    generate_description, generate_sample, load_corpus, load_lexicon, load_templates,
    render_backbone_svg, sample_problems,
)
from markushkit.datagen.describe import choose_substituents, natural_key, render_list
from markushkit.datagen.noise import pepper, shift_image
from markushkit.datagen.render import collage, draw_description, label_runs, rasterize
from markushkit.markushrepr import SubstituentTable

from conftest import WORKED_CXSMILES

LABELLED = "*c1ccc(*)cc1C(*)CC |$R1;;;;;R2;;;;X$,Sg:n:11:n:ht|"


@pytest.fixture(scope="module")
def lex():
    return load_lexicon()


@pytest.fixture(scope="module")
def templates():
    return load_templates()


@pytest.fixture(scope="module")
def labelled():
    return canonicalize_markush(parse_cxsmiles(LABELLED))


# -- descriptions

def test_natural_label_order():
    assert sorted(["R10", "R2", "R1", "X"], key=natural_key) == ["R1", "R2", "R10", "X"]


def test_render_list():
    assert render_list(["a"], (", ", " or ")) == "a"
    assert render_list(["a", "b", "c"], (", ", " or ")) == "a, b or c"


def test_description_deterministic(labelled, templates, lex):
    a = generate_description(labelled, templates, lex, np.random.default_rng(9))
    b = generate_description(labelled, templates, lex, np.random.default_rng(9))
    assert a == b


def test_description_defines_every_label(labelled, templates, lex):
    for seed in range(20):
        text, table = generate_description(labelled, templates, lex, np.random.default_rng(seed))
        assert {"R1", "R2", "X", "n"} <= set(table)
        for label in ("R1", "R2", "X"):
            assert label in text
        assert all(v.isdigit() for v in table["n"])


def test_no_labels_no_description(templates, lex):
    text, table = generate_description(parse_cxsmiles("CCO"), templates, lex, np.random.default_rng(0))
    assert text == "" and table == SubstituentTable()


def test_missing_template_kind(labelled, lex):
    with pytest.raises(MissingTemplateKind):
        generate_description(labelled, TemplateSet(), lex, np.random.default_rng(0))
    only_defs = TemplateSet.from_texts({"definition": "{labels} is {substituents}.\n"})
    with pytest.raises(MissingTemplateKind):
        generate_description(labelled, only_defs, lex, np.random.default_rng(0))


def test_substituents_match_valence(lex):
    cfg = GenConfig(p_abbreviation_as_smiles=0.0)
    mono = {s.text for s in lex.for_valence(1)}
    for seed in range(30):
        subs = choose_substituents(1, lex, cfg, np.random.default_rng(seed))
        assert 1 <= len(subs) <= cfg.max_substituents
        assert len(set(subs)) == len(subs)
        assert set(subs) <= mono


def test_monovalent_site_gets_monovalent_table(templates, lex):
    ms = parse_cxsmiles("*C(=O)N |$R1;;;$|")
    mono = {s.text for s in lex.for_valence(1)} | {s.smiles for s in lex.for_valence(1)}
    for seed in range(20):
        _, table = generate_description(ms, templates, lex, np.random.default_rng(seed))
        assert set(table["R1"]) <= mono


# -- drawing

def test_label_runs():
    assert label_runs("R12", False) == (("R", "normal"), ("12", "sub"))
    assert label_runs("R12", True) == (("R", "normal"), ("12", "sup"))
    assert label_runs("X", False) == (("X", "normal"),)


def test_label_cells_count(labelled):
    cells = draw_backbone(labelled, DrawStyle(), np.random.default_rng(0)).cells
    texts = [c.text for c in cells]
    assert sorted(t for t in texts if t in {"R1", "R2", "X"}) == ["R1", "R2", "X"]
    assert "n" in texts


def test_worked_example_cells():
    ms = canonicalize_markush(parse_cxsmiles(WORKED_CXSMILES))
    cells = draw_backbone(ms, DrawStyle(), np.random.default_rng(0)).cells
    labels = [vg.label for vg in ms.variable_groups]
    assert sorted(c.text for c in cells if c.text in set(labels)) == sorted(labels)


def test_svg_byte_identical(labelled):
    a = render_backbone_svg(labelled, DrawStyle(), np.random.default_rng(4))
    b = render_backbone_svg(labelled, DrawStyle(), np.random.default_rng(4))
    assert a[0] == b[0] and a[1] == b[1]
    assert "<svg " in a[0] and a[0].rstrip().endswith("</svg>")


def test_cells_inside_canvas(labelled):
    d = draw_backbone(labelled, DrawStyle(font_size=16, atom_spacing=40), np.random.default_rng(1))
    for c in d.cells:
        x, y, w, h = c.bbox
        assert 0 <= x and 0 <= y and x + w <= d.width and y + h <= d.height


@pytest.mark.parametrize("right", [False, True])
def test_collage_translates_description(labelled, right):
    rng = np.random.default_rng(2)
    back = draw_backbone(labelled, DrawStyle(), rng)
    desc = draw_description("R1 is methyl or ethyl; R2 is chloro.", DrawStyle(), rng)
    out, (dx, dy) = collage(back, desc, right)
    assert out.cells[:len(back.cells)] == back.cells
    assert out.cells[len(back.cells):] == [c.translated(dx, dy) for c in desc.cells]
    assert (dx, dy) == ((back.width, 0) if right else (0, back.height))


def test_empty_description_leaves_backbone(labelled):
    back = draw_backbone(labelled, DrawStyle(), np.random.default_rng(0))
    assert draw_description("  ", DrawStyle(), np.random.default_rng(0)) is None
    out, offset = collage(back, None, True)
    assert out.cells == back.cells and offset == (0, 0)


def test_rasterize_shape(labelled):
    d = draw_backbone(labelled, DrawStyle(), np.random.default_rng(0))
    img = rasterize(d)
    assert img.shape == (d.height, d.width) and img.dtype == np.uint8
    assert img.min() < 128  # something was drawn


# -- OCR noise

def _cells(n, text="Cl2N"):
    return [OcrCell(text, (10 * i, 5, 20, 12)) for i in range(n)]


def test_ocr_zero_noise_identity():
    cells = _cells(50)
    assert augment_ocr_cells(cells, OcrNoise(), np.random.default_rng(0)) == cells


@given(st.text(st.characters(min_codepoint=33, max_codepoint=126), min_size=1, max_size=10),
       st.integers(0, 2**32 - 1))
@settings(max_examples=200)
def test_substitution_preserves_length(text, seed):
    out = augment_ocr_cells([OcrCell(text, (0, 0, 5, 5))], OcrNoise(p_substitution=1.0),
                            np.random.default_rng(seed))
    assert len(out[0].text) == len(text) and out[0].text != text
    assert out[0].bbox == (0, 0, 5, 5)


@pytest.mark.parametrize("op", ["substitution", "insertion", "deletion", "transposition", "case", "shift"])
def test_ocr_operation_rate(op):
    log: list = []
    augment_ocr_cells(_cells(10000, "Abcdef"), OcrNoise.uniform(0.1), np.random.default_rng(11), log)
    rate = sum(1 for _, o in log if o == op) / 10000
    assert abs(rate - 0.1) <= 0.01


def test_ocr_shift_bounded():
    out = augment_ocr_cells(_cells(200), OcrNoise(p_shift=1.0, max_shift=2), np.random.default_rng(0))
    for a, b in zip(_cells(200), out):
        assert abs(a.bbox[0] - b.bbox[0]) <= 2 and abs(a.bbox[1] - b.bbox[1]) <= 2
        assert a.bbox[2:] == b.bbox[2:] and a.text == b.text


# -- image noise

def test_image_zero_noise_identity():
    img = np.random.default_rng(0).integers(0, 256, (40, 60), dtype=np.uint8)
    cells = _cells(3)
    out, out_cells = augment_image(img, ImageNoise(), np.random.default_rng(0), cells)
    assert np.array_equal(out, img) and out_cells == cells


def test_shift_image_moves_pixels():
    img = np.full((20, 20), 255, dtype=np.uint8)
    img[5, 7] = 0
    moved = shift_image(img, 3, -2)
    assert moved[3, 10] == 0 and (moved == 0).sum() == 1


def test_shift_keeps_cells_on_content():
    img = np.full((50, 50), 255, dtype=np.uint8)
    img[10:14, 20:30] = 0
    cell = OcrCell("R1", (20, 10, 10, 4))
    log: list = []
    out, (moved,) = augment_image(img, ImageNoise(p_shift=1.0, max_shift=5), np.random.default_rng(3),
                                  [cell], log)
    x, y, w, h = moved.bbox
    assert (out[y:y + h, x:x + w] == 0).all()


def test_pepper_exact_rate():
    img = np.full((100, 100), 255, dtype=np.uint8)
    out, k, area = pepper(img, 0.05, 4, 24, np.random.default_rng(0))
    assert k == round(0.05 * area)
    assert (out == 0).sum() == k


def test_scale_scales_cells():
    img = np.full((100, 200), 255, dtype=np.uint8)
    cfg = ImageNoise(p_scale=1.0, scale_range=(0.5, 0.5))
    out, (cell,) = augment_image(img, cfg, np.random.default_rng(0), [OcrCell("X", (40, 20, 10, 10))])
    assert out.shape == (50, 100)
    assert cell.bbox == (20, 10, 5, 5)


# -- stats

def test_stats_fixture():
    items = [
        (parse_cxsmiles("*C |$R1;$|"), {"R1": ["H", "Me"]}),
        (parse_cxsmiles("*.c1ccccc1 |m:0:1.2.3|"), {}),
        (parse_cxsmiles("CCC |Sg:n:1:n:ht|"), {"n": ["1", "2", "3"]}),
        (parse_cxsmiles("CO"), {}),
    ]
    s = dataset_stats(items)
    assert (s.n, s.rgroup, s.m, s.sg) == (4, 0.25, 0.25, 0.25)
    assert s.mean_atoms == pytest.approx((2 + 7 + 3 + 2) / 4)
    assert s.mean_variable_groups == pytest.approx(0.5)
    assert s.mean_substituents == pytest.approx(5 / 4)


def test_stats_plain_and_empty():
    s = dataset_stats([(parse_cxsmiles("CCO"), {})])
    assert (s.rgroup, s.m, s.sg) == (0, 0, 0)
    empty = dataset_stats([])
    assert empty.n == 0 and empty.rgroup is None
    assert "-" in empty.format_table()


# -- pipeline

@pytest.fixture(scope="module")
def pool():
    return Pool.build(load_corpus(), GenConfig())


def test_samples_are_valid(pool, templates, lex):
    cfg = GenConfig()
    for i in range(25):
        sample = generate_sample(i, pool, cfg, templates, lex)
        assert sample_problems(sample) == []


def test_sample_depends_only_on_index(pool, templates, lex):
    cfg = GenConfig()
    a = generate_sample(7, pool, cfg, templates, lex).to_record()
    b = generate_sample(7, pool, cfg, templates, lex).to_record()
    assert a == b
    assert generate_sample(8, pool, cfg, templates, lex).to_record() != a


def test_raster_sample(pool, templates, lex):
    cfg = GenConfig(image_noise=ImageNoise(p_pepper=1.0))
    sample = generate_sample(0, pool, cfg, templates, lex, raster=True)
    assert sample.pixels is not None and sample.pixels.dtype == np.uint8


def test_dataset_independent_of_workers(templates, lex):
    corpus = load_corpus()[:60]
    cfg = GenConfig(pool_size=30)
    a, fa = generate_dataset(corpus, cfg, templates, lex, 8, workers=1)
    b, fb = generate_dataset(corpus, cfg, templates, lex, 8, workers=2)
    assert [s.to_record() for s in a] == [s.to_record() for s in b] and fa == fb


def test_small_dataset_records(small_dataset):
    _, records = small_dataset
    keys = {"id", "cxsmiles", "optimized", "description", "table", "ocr_cells", "image_path"}
    for r in records:
        assert set(r) == keys
    assert dataset_stats(records).n == len(records)
