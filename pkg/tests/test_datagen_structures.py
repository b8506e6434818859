from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from markushkit.chemgraph import parse_smiles, path_fingerprint, tanimoto, valence_errors
from markushkit.cxsmiles import parse_cxsmiles, write_cxsmiles, markush_equal
from markushkit.datagen import (
    EmptyCorpus, GenConfig, Gates, augment_to_markush, load_corpus, load_lexicon, load_templates,
    ring_cycles, sample_base_molecules,
)
from markushkit.datagen.augment import (
    eligibility, repeat_units, replaceable_atoms, ring_attachment_atoms, site_valence,
    variation_rings,
)
from markushkit.datagen.config import ConfigError, OcrNoise, load_config
from markushkit.datagen.lexicon import LexiconError, TemplateError, TemplateSet, parse_lexicon

ZERO = dict(p_variable_group=0, p_parentheses=0, p_bracket_pair=0, p_rfrag_ring_atom=0,
            p_rfrag_ring=0, p_funcgroup_ring=0)


@pytest.fixture(scope="module")
def lex():
    return load_lexicon()


@pytest.fixture(scope="module")
def corpus():
    return load_corpus()


# -- config

def test_config_json_round_trip(tmp_path):
    cfg = GenConfig(seed=5, ocr_noise=OcrNoise.uniform(0.1))
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    again = load_config(path)
    assert again == cfg and again.digest() == cfg.digest()


def test_config_digest_changes_with_seed():
    assert GenConfig(seed=1).digest() != GenConfig(seed=2).digest()


@pytest.mark.parametrize("bad", [
    {"p_variable_group": 1.5},
    {"seed": -1},
    {"bogus": 1},
    {"max_substituents": 0},
    {"variable_labels": ["R1", "n"]},
    {"noise_labels": ["R1"]},
    {"ocr_noise": {"p_case": -0.1}},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        GenConfig.from_dict(bad)


# -- bundled data

def test_corpus_valid(corpus):
    assert len(corpus) >= 100
    ids = [i for i, _ in corpus]
    assert len(set(ids)) == len(ids)
    for _, smi in corpus:
        assert valence_errors(parse_smiles(smi)) == []


def test_lexicon_sections(lex):
    assert set(lex.valences) >= {1, 2}
    assert lex.functional_groups and lex.atoms and lex.integer_ranges
    for smi in lex.functional_groups:
        parse_smiles(smi)
    for lo, hi in lex.integer_ranges:
        assert 0 <= lo <= hi


def test_lexicon_errors():
    with pytest.raises(LexiconError):
        parse_lexicon("[substituents]\nx\tmethyl\n")
    with pytest.raises(LexiconError):
        parse_lexicon("[nonsense]\n1\tfoo\n")


def test_bracket_smiles_is_not_a_section():
    lex = parse_lexicon("[abbreviations]\n1\tNO2\t[N+](=O)[O-]\n[integers]\n1-3\n")
    assert lex.abbreviations[0].smiles == "[N+](=O)[O-]"


def test_templates_validate():
    tpl = load_templates()
    assert tpl.definition and tpl.frequency and tpl.lists
    with pytest.raises(TemplateError):
        TemplateSet(definition=("{labels} is {colour}",))
    with pytest.raises(TemplateError):
        TemplateSet(definition=("{labels} only",))
    with pytest.raises(TemplateError):
        TemplateSet.from_texts({"lists": "no separator here\n"})


# -- diversity sampling

def test_sample_single():
    assert len(sample_base_molecules(["CCO"], 1, np.random.default_rng(0))) == 1


def test_sample_empty_corpus():
    with pytest.raises(EmptyCorpus):
        sample_base_molecules([], 1, np.random.default_rng(0))


def test_sample_too_many():
    with pytest.raises(ValueError):
        sample_base_molecules(["C"], 2, np.random.default_rng(0))


@pytest.mark.parametrize("seed", range(6))
def test_diverse_pair_contains_benzene(seed):
    corpus = ["CCO", "OCC", "c1ccccc1"]
    graphs = [parse_smiles(s) for s in corpus]
    fps = [path_fingerprint(g) for g in graphs]

    # brute force: the best 2-subsets by minimum pairwise distance
    def spread(pair):
        a, b = pair
        return 1 - tanimoto(fps[a], fps[b])

    best = max(spread(p) for p in itertools.combinations(range(3), 2))
    winners = [set(p) for p in itertools.combinations(range(3), 2) if spread(p) == best]
    assert all(2 in w for w in winners)
    picked = sample_base_molecules(corpus, 2, np.random.default_rng(seed))
    assert any(g == graphs[2] for g in picked)


def test_sample_deterministic(corpus):
    smiles = [s for _, s in corpus[:40]]
    a = sample_base_molecules(smiles, 10, np.random.default_rng(3))
    b = sample_base_molecules(smiles, 10, np.random.default_rng(3))
    assert a == b


# -- site detection

def test_site_finders():
    g = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    assert 0 in replaceable_atoms(g)
    assert not set(replaceable_atoms(g)) & g.ring_atoms
    assert site_valence(g, 1) == 4
    assert set(ring_attachment_atoms(g)) == {5, 6, 9, 10}
    assert [len(c) for c in variation_rings(g)] == [6]
    assert (3,) in repeat_units(g)


def test_charged_and_bracket_atoms_excluded():
    g = parse_smiles("C[N+](C)(C)Cc1cc[nH]c1")
    assert 1 not in replaceable_atoms(g)
    nh = next(i for i, a in enumerate(g.atoms) if a.explicit_h_count == 1)
    assert nh not in ring_attachment_atoms(g)


def test_ring_cycles_walk_order():
    g = parse_smiles("c1ccc2ccccc2c1")
    cycles = ring_cycles(g)
    assert [len(c) for c in cycles] == [6, 6]
    for c in cycles:
        for u, v in zip(c, c[1:] + c[:1]):
            assert g.bond_order(u, v) is not None


def test_gates_calibration():
    cfg = GenConfig(target_rgroup=0.5, target_m=0.5, target_sg=0.5)
    graphs = [parse_smiles("c1ccccc1"), parse_smiles("CCCC")]
    gates = Gates.calibrated(cfg, graphs)
    assert eligibility(graphs[0]).m and not eligibility(graphs[1]).m
    assert gates.m == 1.0 and gates.rgroup == 0.5


# -- augmentation

def test_zero_probabilities_identity(lex, corpus):
    cfg = GenConfig(**ZERO)
    for _, smi in corpus[:30]:
        g = parse_smiles(smi)
        ms = augment_to_markush(g, cfg, lex, np.random.default_rng(1))
        assert ms.graph == g and not ms.has_features


def test_zero_gates_identity(lex, corpus):
    g = parse_smiles(corpus[0][1])
    ms = augment_to_markush(g, GenConfig(), lex, np.random.default_rng(1), Gates(0, 0, 0))
    assert ms.graph == g and not ms.has_features


def test_neopentane_cap(lex):
    cfg = GenConfig(**{**ZERO, "p_variable_group": 1.0}, max_variable_groups=3)
    g = parse_smiles("C(C)(C)(C)C")
    for seed in range(10):
        ms = augment_to_markush(g, cfg, lex, np.random.default_rng(seed))
        assert len(ms.variable_groups) == 3
        assert all(ms.graph.atoms[vg.atom_index].is_wildcard for vg in ms.variable_groups)
        assert len(set(ms.labels)) == 3


def test_position_variation_covers_ring(lex):
    cfg = GenConfig(**{**ZERO, "p_funcgroup_ring": 1.0})
    g = parse_smiles("Cc1ccccc1")
    ms = augment_to_markush(g, cfg, lex, np.random.default_rng(0))
    assert ms.position_variations
    ring = sorted(variation_rings(g)[0])
    assert list(ms.position_variations[0].candidate_atoms) == ring


def test_bracket_pairs_use_frequency_labels(lex):
    cfg = GenConfig(**{**ZERO, "p_bracket_pair": 1.0})
    ms = augment_to_markush(parse_smiles("OCCCCCN"), cfg, lex, np.random.default_rng(0))
    assert 1 <= len(ms.frequency_variations) <= cfg.max_frequency_variations
    assert set(fv.label for fv in ms.frequency_variations) <= set(cfg.frequency_label_weights)


@given(st.integers(0, 2**32 - 1), st.integers(0, 153))
@settings(max_examples=150)
def test_augmented_structures_valid(seed, k):
    lex = load_lexicon()
    smi = load_corpus()[k][1]
    cfg = GenConfig()
    ms = augment_to_markush(parse_smiles(smi), cfg, lex, np.random.default_rng(seed), Gates(1, 1, 1))
    assert valence_errors(ms.graph) == []
    assert markush_equal(parse_cxsmiles(write_cxsmiles(ms)), ms)
    assert len(ms.variable_groups) <= cfg.max_variable_groups
    assert len(ms.position_variations) <= cfg.max_position_variations
    assert len(ms.frequency_variations) <= cfg.max_frequency_variations
    assert len(set(ms.labels)) == len(ms.labels)
    assert set(ms.labels) <= set(cfg.variable_labels)


def test_config_file_in_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        load_config(path)
