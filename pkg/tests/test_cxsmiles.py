from __future__ import annotations

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from markushkit.chemgraph import Atom, Bond, MolecularGraph, canonical_smiles, parse_smiles
from markushkit.cxsmiles import (
    FrequencyVariation, IndexOutOfRange, LabelCountMismatch, MalformedExtension, MarkushStructure,
    PositionVariation, UnknownField, VariableGroup, canonical_cxsmiles, canonicalize_markush,
    markush_equal, parse_cxsmiles, strip_markush, write_cxsmiles,
)

from conftest import WORKED_CXSMILES, markush_structures


@pytest.fixture
def worked():
    return parse_cxsmiles(WORKED_CXSMILES)


def test_worked_example_fields(worked):
    assert len(worked.graph.atoms) == 36
    assert {(vg.label, vg.atom_index) for vg in worked.variable_groups} == {
        ("X", 3), ("X", 5), ("G1", 7), ("G2", 33), ("G4", 35)}
    cands = [pv.candidate_atoms for pv in worked.position_variations]
    assert cands == [(24, 25, 26, 27, 28), (14, 15, 16, 17, 18, 19), (24, 25, 26, 27, 28)]
    assert [(fv.label, fv.connectivity) for fv in worked.frequency_variations] == [("w", "ht"), ("", "ht")]


def test_worked_example_fixpoint(worked):
    once = write_cxsmiles(worked)
    assert write_cxsmiles(parse_cxsmiles(once)) == once
    canon = canonical_cxsmiles(worked)
    assert canonical_cxsmiles(parse_cxsmiles(canon)) == canon


def test_plain_smiles():
    ms = parse_cxsmiles("CCO")
    assert not ms.has_features
    assert write_cxsmiles(ms) == "CCO"


@pytest.mark.parametrize("text, error", [
    ("C |$R1;R2$|", LabelCountMismatch),
    ("CC |m:0:5|", IndexOutOfRange),
    ("CC |Sg:n:9:n:ht|", IndexOutOfRange),
    ("CC |foo:1|", UnknownField),
    ("CC |Sg:gen:0:n:ht|", UnknownField),
    ("CC |$R1$", MalformedExtension),
    ("CC |$R1;$|", MalformedExtension),  # label on a carbon
])
def test_parse_errors(text, error):
    with pytest.raises(error):
        parse_cxsmiles(text)


def test_candidates_written_ascending():
    g = parse_smiles("*.c1ccccc1")
    ms = MarkushStructure(g, (), (PositionVariation(0, (6, 2, 4)),))
    assert "m:0:2.4.6" in write_cxsmiles(ms)


def test_field_order_and_no_spaces():
    text = write_cxsmiles(parse_cxsmiles("*CC*.*.c1ccccc1 |$R1;;;R2$,Sg:n:2:m:ht,m:4:5.6,Sg:n:1:n:hh|"))
    ext = text.split("|")[1]
    assert " " not in ext
    fields = ext.split(",")
    assert fields[0].startswith("$")
    assert [f.split(":")[0] for f in fields[1:]] == ["m", "Sg", "Sg"]
    assert fields[2].startswith("Sg:n:1:")


def test_blank_sg_label_equals_absent():
    a = parse_cxsmiles("CCC |Sg:n:1: :ht|")
    b = parse_cxsmiles("CCC |Sg:n:1::ht|")
    assert a == b and markush_equal(a, b)


def test_structure_invariants():
    g = MolecularGraph((Atom("C"), Atom("*", variable_label="R1")), (Bond(0, 1),))
    with pytest.raises(MalformedExtension):
        MarkushStructure(g)  # labelled atom not listed
    with pytest.raises(ValueError):
        PositionVariation(1, (1, 2))
    with pytest.raises(ValueError):
        FrequencyVariation((), "n")
    with pytest.raises(ValueError):
        VariableGroup(0, "")


def test_strip_identity_and_single_carbon():
    plain = parse_cxsmiles("CCO")
    assert strip_markush(plain) == plain.graph
    stripped = strip_markush(parse_cxsmiles("*C |$R1;$|"))
    assert [a.element for a in stripped.atoms] == ["C"] and not stripped.bonds


def test_strip_worked_example_permutation_stable(worked):
    import random

    ref = canonical_smiles(strip_markush(worked))
    rnd = random.Random(7)
    for _ in range(20):
        order = list(range(len(worked.graph)))
        rnd.shuffle(order)
        assert canonical_smiles(strip_markush(worked.permute(order))) == ref


def test_labels_distinguish():
    assert not markush_equal(parse_cxsmiles("*C |$R1;$|"), parse_cxsmiles("*C |$R2;$|"))


@given(markush_structures(), st.randoms(use_true_random=False))
@settings(max_examples=200)
def test_canonical_permutation_invariance(ms, rnd):
    order = list(range(len(ms.graph)))
    rnd.shuffle(order)
    assert canonicalize_markush(ms.permute(order)) == canonicalize_markush(ms)
    assert canonical_cxsmiles(ms.permute(order)) == canonical_cxsmiles(ms)


@given(markush_structures())
@settings(max_examples=200)
def test_round_trip_fixpoint(ms):
    text = write_cxsmiles(ms)
    again = parse_cxsmiles(text)
    assert canonicalize_markush(again) == canonicalize_markush(ms)
    assert write_cxsmiles(parse_cxsmiles(write_cxsmiles(again))) == write_cxsmiles(again)


@given(markush_structures())
@settings(max_examples=100)
def test_canonicalize_idempotent(ms):
    once = canonicalize_markush(ms)
    assert canonicalize_markush(once) == once


@given(markush_structures())
@settings(max_examples=100)
def test_label_multiset_preserved(ms):
    again = parse_cxsmiles(write_cxsmiles(ms))
    assert sorted(again.labels) == sorted(ms.labels)


@given(markush_structures(), st.randoms(use_true_random=False))
@settings(max_examples=100)
def test_strip_commutes_with_permutation(ms, rnd):
    order = list(range(len(ms.graph)))
    rnd.shuffle(order)
    assert canonical_smiles(strip_markush(ms.permute(order))) == canonical_smiles(strip_markush(ms))


@given(markush_structures(max_atoms=8), markush_structures(max_atoms=8), markush_structures(max_atoms=8))
@settings(max_examples=50)
def test_markush_equal_is_equivalence(a, b, c):
    assert markush_equal(a, a)
    assert markush_equal(a, b) == markush_equal(b, a)
    if markush_equal(a, b) and markush_equal(b, c):
        assert markush_equal(a, c)
