"""Diversity sampling of base molecules and their conversion into Markush structures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from ..chemgraph import (
    Atom, Bond, BondOrder, MolecularGraph, parse_smiles, path_fingerprint, tanimoto,
    open_valence,
)
from ..cxsmiles import FrequencyVariation, MarkushStructure, PositionVariation
from .config import GenConfig
from .lexicon import Lexicon


class EmptyCorpus(ValueError):
    pass


def sample_base_molecules(corpus: Sequence[str | MolecularGraph], n: int,
                          rng: np.random.Generator) -> list[MolecularGraph]:
    """Greedy max-min selection on fingerprint distance; first pick is random."""
    if not corpus:
        raise EmptyCorpus("corpus is empty")
    if n > len(corpus):
        raise ValueError(f"cannot select {n} molecules from a corpus of {len(corpus)}")
    graphs = [parse_smiles(m) if isinstance(m, str) else m for m in corpus]
    return [graphs[i] for i in max_min_indices(graphs, n, rng)]


def max_min_indices(graphs: Sequence[MolecularGraph], n: int,
                    rng: np.random.Generator) -> list[int]:
    if n <= 0:
        return []
    fps = [path_fingerprint(g) for g in graphs]
    first = int(rng.integers(len(graphs)))
    chosen = [first]
    # running minimum distance from each candidate to the selected set
    mind = np.array([1.0 - tanimoto(fps[first], f) for f in fps])
    mind[first] = -1.0
    while len(chosen) < n:
        nxt = int(np.argmax(mind))  # ties go to the lowest index
        chosen.append(nxt)
        d = np.array([1.0 - tanimoto(fps[nxt], f) for f in fps])
        mind = np.minimum(mind, d)
        mind[chosen] = -1.0
    return chosen


# --------------------------------------------------------------------------
# rings

def _order_cycle(graph: MolecularGraph, nodes: Sequence[int]) -> list[int]:
    """Arrange a ring's atoms in walking order (smallest atom first)."""
    members = set(nodes)
    adj = {u: sorted(v for v, _ in graph.neighbors(u) if v in members) for u in members}
    start = min(members)
    path = [start]
    used = {start}

    def extend() -> bool:
        if len(path) == len(members):
            return start in adj[path[-1]]
        for v in adj[path[-1]]:
            if v not in used:
                path.append(v)
                used.add(v)
                if extend():
                    return True
                path.pop()
                used.discard(v)
        return False

    if not extend():
        return sorted(members)
    return path


def ring_cycles(graph: MolecularGraph) -> list[list[int]]:
    """Smallest set of smallest rings, each in walking order, sorted by (size, atoms)."""
    ring = graph.ring_bonds
    if not ring:
        return []
    g = nx.Graph()
    g.add_edges_from(sorted(ring))
    cycles = [_order_cycle(graph, c) for c in nx.minimum_cycle_basis(g)]
    return sorted(cycles, key=lambda c: (len(c), sorted(c)))


# --------------------------------------------------------------------------
# site detection

def replaceable_atoms(graph: MolecularGraph) -> list[int]:
    """Atoms that may become variable groups: uncharged, non-ring, non-wildcard.

    Sites consuming more than four bond orders are skipped since no
    substituent could fill them.
    """
    ring = graph.ring_atoms
    return [i for i, a in enumerate(graph.atoms)
            if not a.formal_charge and a.element not in ("*", "H") and i not in ring
            and not a.is_aromatic and a.isotope is None and site_valence(graph, i) <= 4]


def site_valence(graph: MolecularGraph, i: int) -> int:
    """Bond orders an atom consumes; an aromatic bond counts as one."""
    return sum(1 if o == BondOrder.AROMATIC else int(o) for _, o in graph.neighbors(i))


def ring_attachment_atoms(graph: MolecularGraph) -> list[int]:
    """Ring atoms with a free implicit hydrogen to trade for an R-fragment.

    Bracket atoms such as ``[nH]`` state their hydrogens explicitly and are skipped.
    """
    return [i for i in sorted(graph.ring_atoms)
            if graph.atoms[i].element != "*" and not graph.atoms[i].is_bracket
            and open_valence(graph, i) >= 1]


def variation_rings(graph: MolecularGraph) -> list[list[int]]:
    """Rings that may receive a position variation."""
    return [c for c in ring_cycles(graph) if 3 <= len(c) <= 8]


def repeat_units(graph: MolecularGraph) -> list[tuple[int, ...]]:
    """Chain units (one atom or two bonded atoms) joined to the rest by two single bonds."""
    ring = graph.ring_atoms

    def ok(i):
        a = graph.atoms[i]
        return i not in ring and a.element not in ("*", "H") and not a.formal_charge

    def crossing(unit):
        out = []
        for u in unit:
            for v, order in graph.neighbors(u):
                if v not in unit:
                    out.append(order)
        return out

    units = []
    for i in range(len(graph.atoms)):
        if ok(i):
            orders = crossing((i,))
            if len(orders) == 2 and all(o == BondOrder.SINGLE for o in orders):
                units.append((i,))
    for b in graph.bonds:
        if ok(b.a) and ok(b.b) and b.order == BondOrder.SINGLE:
            orders = crossing((b.a, b.b))
            if len(orders) == 2 and all(o == BondOrder.SINGLE for o in orders):
                units.append((b.a, b.b))
    return units


@dataclass(frozen=True)
class Eligibility:
    rgroup: bool
    m: bool
    sg: bool


def eligibility(graph: MolecularGraph) -> Eligibility:
    return Eligibility(
        rgroup=bool(replaceable_atoms(graph) or ring_attachment_atoms(graph)),
        m=bool(variation_rings(graph)),
        sg=bool(repeat_units(graph)),
    )


@dataclass(frozen=True)
class Gates:
    """Per-sample probabilities that each feature kind is attempted at all."""

    rgroup: float = 1.0
    m: float = 1.0
    sg: float = 1.0

    @classmethod
    def calibrated(cls, cfg: GenConfig, graphs: Sequence[MolecularGraph]) -> Gates:
        """Scale the targets by the share of molecules that can carry each feature."""
        if not graphs:
            return cls(cfg.target_rgroup, cfg.target_m, cfg.target_sg)
        el = [eligibility(g) for g in graphs]

        def gate(target, frac):
            return 0.0 if frac == 0 else min(1.0, target / frac)

        n = len(el)
        return cls(
            gate(cfg.target_rgroup, sum(e.rgroup for e in el) / n),
            gate(cfg.target_m, sum(e.m for e in el) / n),
            gate(cfg.target_sg, sum(e.sg for e in el) / n),
        )


# --------------------------------------------------------------------------
# augmentation

class _Editor:
    def __init__(self, graph: MolecularGraph):
        self.atoms = list(graph.atoms)
        self.bonds = list(graph.bonds)

    def add(self, atom: Atom) -> int:
        self.atoms.append(atom)
        return len(self.atoms) - 1

    def bond(self, a: int, b: int, order: BondOrder = BondOrder.SINGLE) -> None:
        self.bonds.append(Bond(a, b, order))

    def graph(self) -> MolecularGraph:
        return MolecularGraph(tuple(self.atoms), tuple(self.bonds))

    def append_fragment(self, frag: MolecularGraph) -> int:
        base = len(self.atoms)
        self.atoms.extend(frag.atoms)
        self.bonds.extend(Bond(b.a + base, b.b + base, b.order) for b in frag.bonds)
        return base


def _pick(rng: np.random.Generator, seq: Sequence):
    return seq[int(rng.integers(len(seq)))]


def _frequency_label(cfg: GenConfig, rng: np.random.Generator) -> str:
    keys = sorted(cfg.frequency_label_weights)
    w = np.array([cfg.frequency_label_weights[k] for k in keys], dtype=float)
    return keys[int(rng.choice(len(keys), p=w / w.sum()))]


def augment_to_markush(g: MolecularGraph, cfg: GenConfig, lex: Lexicon,
                       rng: np.random.Generator, gates: Gates | None = None) -> MarkushStructure:
    """Turn a plain molecule into a Markush structure.

    Each operation is tried per eligible site with its own probability.
    ``gates`` decides per sample whether each feature kind is attempted; a
    kind that is attempted but hit no site by chance is applied to one
    random eligible site so that the sample-level rates follow the gates.
    Without ``gates`` every kind is attempted but none is forced.
    """
    force = gates is not None
    gates = gates or Gates()
    want_r = rng.random() < gates.rgroup
    want_m = rng.random() < gates.m
    want_sg = rng.random() < gates.sg

    labels_pool = list(cfg.variable_labels)
    rng.shuffle(labels_pool)
    labels: dict[int, str] = {}

    def fresh_label() -> str | None:
        if len(labels) >= min(cfg.max_variable_groups, len(labels_pool)):
            return None
        return labels_pool[len(labels)]

    # repeat units first so that replacements do not consume their atoms
    fvs: list[FrequencyVariation] = []
    used: set[int] = set()
    if want_sg and cfg.max_frequency_variations:
        units = repeat_units(g)
        chosen = [u for u in units if rng.random() < cfg.p_bracket_pair]
        if not chosen and force and units:
            chosen = [_pick(rng, units)]
        for unit in chosen:
            if len(fvs) >= cfg.max_frequency_variations:
                break
            if used & set(unit):
                continue
            used |= set(unit)
            fvs.append(FrequencyVariation(unit, _frequency_label(cfg, rng)))

    ed = _Editor(g)
    if want_r:
        sites = [i for i in replaceable_atoms(g) if i not in used]
        ring_sites = ring_attachment_atoms(g)
        picks = [("atom", i) for i in sites if rng.random() < cfg.p_variable_group]
        picks += [("ring", i) for i in ring_sites if rng.random() < cfg.p_rfrag_ring_atom]
        if not picks and force:
            options = [("atom", i) for i in sites] + [("ring", i) for i in ring_sites]
            if options:
                picks = [_pick(rng, options)]
        for kind, i in picks:
            label = fresh_label()
            if label is None:
                break
            if kind == "atom":
                ed.atoms[i] = Atom("*", variable_label=label)
                labels[i] = label
            else:
                k = ed.add(Atom("*", variable_label=label))
                ed.bond(i, k)
                labels[k] = label

    pvs: list[PositionVariation] = []
    if want_m and cfg.max_position_variations:
        rings = variation_rings(g)
        ops = []
        for ring in rings:
            if want_r and rng.random() < cfg.p_rfrag_ring:
                ops.append(("rfrag", ring))
            if lex.functional_groups and rng.random() < cfg.p_funcgroup_ring:
                ops.append(("group", ring))
        if not ops and force and rings:
            kinds = ["group"] if lex.functional_groups else []
            if want_r:
                kinds.append("rfrag")
            if kinds:
                ops = [(_pick(rng, kinds), _pick(rng, rings))]
        for kind, ring in ops:
            if len(pvs) >= cfg.max_position_variations:
                break
            label = fresh_label() if kind == "rfrag" else None
            if kind == "rfrag" and label is None:
                # out of labels: a functional group keeps the variation
                if not lex.functional_groups:
                    continue
                kind = "group"
            if kind == "rfrag":
                end = ed.add(Atom("*"))
                k = ed.add(Atom("*", variable_label=label))
                ed.bond(end, k)
                labels[k] = label
            else:
                end = ed.append_fragment(parse_smiles(_pick(rng, lex.functional_groups)))
            pvs.append(PositionVariation(end, tuple(ring)))

    return MarkushStructure.build(ed.graph(), labels, pvs, fvs)


def sample_parentheses(ms: MarkushStructure, cfg: GenConfig,
                       rng: np.random.Generator) -> frozenset[int]:
    """Atoms whose drawn label gets wrapped in parentheses (drawing only)."""
    out = []
    for i, a in enumerate(ms.graph.atoms):
        if a.element not in ("C", "*") and rng.random() < cfg.p_parentheses:
            out.append(i)
    return frozenset(out)
