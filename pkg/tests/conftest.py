from __future__ import annotations

import json
import time

import hypothesis.strategies as st
import pytest
from hypothesis import HealthCheck, settings

from markushkit.chemgraph import Atom, Bond, BondOrder, MolecularGraph

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance outcomes, printed once at the end of the run
ACCEPTANCE: list[tuple[str, bool, str]] = []
TIMINGS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")

# boxed example from the CXSMILES documentation of a Markush figure
WORKED_SMILES = ("[H]C1=C([*])C([*])=C([*])C=C1N(C)C(=O)C1=CC=CC(=C1)S(=O)(=O)NC1CCCC1"
                 ".CCO.*[*].*[*]")
WORKED_CXSMILES = (WORKED_SMILES + " |$;;;X;;X;;G1;;;;;;;;;;;;;;;;;;;;;;;;;;G2;;G4$,"
                   "m:29:24.25.26.27.28,m:32:14.19.15.18.17.16,m:34:24.25.26.27.28,"
                   "Sg:n:28:w:ht,Sg:n:30: :ht|")

DRUGS = [
    "CC(=O)Oc1ccccc1C(=O)O",
    "CN1C=NC2=C1C(=O)N(C(=O)N2C)C",
    "CC(C)Cc1ccc(cc1)C(C)C(=O)O",
    "c1ccc2ccccc2c1",
    "OC1CCCCC1",
    "Clc1ccc(cc1)C(c1ccccc1)N1CCNCC1",
    "NC(=O)c1cccnc1",
    "C#CCO",
    "C[N+](C)(C)CC(=O)[O-]",
    "c1cc[nH]c1",
    "FC(F)(F)c1ccc(OCCN)cc1",
    "O=S(=O)(N)c1ccc(N)cc1",
]

_ELEMENTS = ("C", "C", "C", "N", "O", "S", "Cl", "*")


@st.composite
def molecular_graphs(draw, min_atoms: int = 1, max_atoms: int = 14, rings: int = 2):
    """Random connected graphs: a random tree plus a few closing bonds."""
    n = draw(st.integers(min_atoms, max_atoms))
    atoms = tuple(Atom(draw(st.sampled_from(_ELEMENTS))) for _ in range(n))
    bonds = {}
    for i in range(1, n):
        j = draw(st.integers(0, i - 1))
        bonds[(j, i)] = draw(st.sampled_from([BondOrder.SINGLE, BondOrder.SINGLE, BondOrder.DOUBLE]))
    for _ in range(draw(st.integers(0, rings))):
        if n < 4:
            break
        a = draw(st.integers(0, n - 1))
        b = draw(st.integers(0, n - 1))
        if a != b and (min(a, b), max(a, b)) not in bonds:
            bonds[(min(a, b), max(a, b))] = BondOrder.SINGLE
    return MolecularGraph(atoms, tuple(Bond(a, b, o) for (a, b), o in sorted(bonds.items())))


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A 40-sample generated dataset: (directory, records)."""
    from markushkit.cli import main

    out = tmp_path_factory.mktemp("small")
    assert main(["generate", "--n", "40", "--out", str(out)]) == 0
    records = [json.loads(line) for line in (out / "dataset.jsonl").read_text().splitlines()]
    return out, records


@pytest.fixture(scope="session")
def generated_1000(tmp_path_factory):
    """The 1000-sample dataset used by the acceptance suite."""
    from markushkit.cli import main

    out = tmp_path_factory.mktemp("gen1000")
    cfg = out / "config.json"
    cfg.write_text(json.dumps({"seed": 2024, "target_rgroup": 0.95, "target_m": 0.54,
                               "target_sg": 0.39}))
    start = time.perf_counter()
    assert main(["generate", "--config", str(cfg), "--n", "1000", "--out", str(out / "ds")]) == 0
    TIMINGS["generate_1000"] = time.perf_counter() - start
    path = out / "ds" / "dataset.jsonl"
    records = [json.loads(line) for line in path.read_text().splitlines()]
    return out / "ds", records


@st.composite
def markush_structures(draw, max_atoms: int = 14):
    """Random graphs with labelled wildcards, ``m`` and ``Sg`` sections."""
    from markushkit.cxsmiles import FrequencyVariation, MarkushStructure, PositionVariation

    g = draw(molecular_graphs(min_atoms=2, max_atoms=max_atoms))
    n = len(g)
    labels = {}
    for i, a in enumerate(g.atoms):
        if a.is_wildcard and draw(st.booleans()):
            labels[i] = draw(st.sampled_from(["R1", "R2", "X", "G1", "Ra"]))
    pvs = []
    for _ in range(draw(st.integers(0, 2))):
        end = draw(st.integers(0, n - 1))
        cands = draw(st.sets(st.integers(0, n - 1).filter(lambda k: k != end), min_size=1, max_size=5))
        pvs.append(PositionVariation(end, tuple(cands)))
    fvs = []
    for _ in range(draw(st.integers(0, 2))):
        atoms = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=3))
        fvs.append(FrequencyVariation(tuple(atoms), draw(st.sampled_from(["n", "m", "w", ""])),
                                      draw(st.sampled_from(["ht", "hh", "eu"]))))
    return MarkushStructure.build(g, labels, pvs, fvs)
