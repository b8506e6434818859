"""
CXSMILES extension block: variable-group labels (``$...$``), position
variation (``m:``) and frequency variation (``Sg:n:``) sections.

Grammar of the supported subset (EBNF)::

    cxsmiles   = smiles , [ ws , "|" , [ field , { "," , field } ] , "|" ] ;
    field      = labels | position | frequency ;
    labels     = "$" , label , { ";" , label } , "$" ;      (* positional *)
    position   = "m:" , index , ":" , index , { "." , index } ;
    frequency  = "Sg:n:" , index , { "," , index } , ":" , sglabel , ":" , conn ;
    conn       = "ht" | "hh" | "eu" ;
    label      = { any character except ";" "$" "|" } ;
    sglabel    = { any character except ":" "," "|" } ;
    index      = digit , { digit } ;                        (* 0-based *)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .chemgraph import (
    MolecularGraph,
    WILDCARD,
    atom_invariant,
    parse_smiles,
    ranks_to_order,
    refine_ranks,
    relabel,
    smiles_lexemes,
    canonical_smiles,
)

CONNECTIVITIES = ("ht", "hh", "eu")


class CxsmilesError(ValueError):
    pass


class MalformedExtension(CxsmilesError):
    pass


class LabelCountMismatch(CxsmilesError):
    pass


class IndexOutOfRange(CxsmilesError):
    pass


class UnknownField(CxsmilesError):
    pass


@dataclass(frozen=True, order=True)
class VariableGroup:
    atom_index: int
    label: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("variable group label must be non-empty")


@dataclass(frozen=True, order=True)
class PositionVariation:
    """A bond from ``endpoint_atom`` to any one of ``candidate_atoms``."""

    endpoint_atom: int
    candidate_atoms: tuple[int, ...]

    def __post_init__(self):
        cands = tuple(sorted(self.candidate_atoms))
        if not cands:
            raise ValueError("position variation without candidate atoms")
        if len(set(cands)) != len(cands):
            raise ValueError(f"duplicate candidate atoms in {cands}")
        if self.endpoint_atom in cands:
            raise ValueError("endpoint atom listed among its own candidates")
        object.__setattr__(self, "candidate_atoms", cands)


def normalize_sg_label(label: str | None) -> str:
    """Blank and missing repeat labels are the same thing."""
    return (label or "").strip()


@dataclass(frozen=True, order=True)
class FrequencyVariation:
    """A repeat unit (``Sg:n``) over ``atoms`` with repetition ``label``."""

    atoms: tuple[int, ...]
    label: str = ""
    connectivity: str = "ht"

    def __post_init__(self):
        atoms = tuple(sorted(self.atoms))
        if not atoms:
            raise ValueError("frequency variation without atoms")
        if len(set(atoms)) != len(atoms):
            raise ValueError(f"duplicate atoms in {atoms}")
        if self.connectivity not in CONNECTIVITIES:
            raise ValueError(f"unknown connectivity {self.connectivity!r}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "label", normalize_sg_label(self.label))


@dataclass(frozen=True)
class MarkushStructure:
    """A molecular graph with Markush features referencing its atom indices.

    Variable-group labels live both on the graph atoms and in
    ``variable_groups``; :meth:`build` keeps the two in sync.
    """

    graph: MolecularGraph
    variable_groups: tuple[VariableGroup, ...] = ()
    position_variations: tuple[PositionVariation, ...] = ()
    frequency_variations: tuple[FrequencyVariation, ...] = ()

    def __post_init__(self):
        n = len(self.graph.atoms)
        vgs = tuple(sorted(self.variable_groups))
        seen = set()
        for vg in vgs:
            if not 0 <= vg.atom_index < n:
                raise IndexOutOfRange(f"variable group atom {vg.atom_index} >= {n}")
            atom = self.graph.atoms[vg.atom_index]
            if atom.element != WILDCARD:
                raise MalformedExtension(f"label {vg.label!r} on non-wildcard atom {vg.atom_index}")
            if atom.variable_label != vg.label:
                raise MalformedExtension(f"atom {vg.atom_index} carries label {atom.variable_label!r}, "
                                         f"expected {vg.label!r}")
            if vg.atom_index in seen:
                raise MalformedExtension(f"atom {vg.atom_index} has two variable groups")
            seen.add(vg.atom_index)
        for i, atom in enumerate(self.graph.atoms):
            if atom.variable_label is not None and i not in seen:
                raise MalformedExtension(f"labelled atom {i} missing from variable groups")
        for pv in self.position_variations:
            for idx in (pv.endpoint_atom, *pv.candidate_atoms):
                if not 0 <= idx < n:
                    raise IndexOutOfRange(f"m section index {idx} >= {n}")
        for fv in self.frequency_variations:
            for idx in fv.atoms:
                if not 0 <= idx < n:
                    raise IndexOutOfRange(f"Sg section index {idx} >= {n}")
        object.__setattr__(self, "variable_groups", vgs)
        object.__setattr__(self, "position_variations", tuple(self.position_variations))
        object.__setattr__(self, "frequency_variations", tuple(self.frequency_variations))

    @classmethod
    def build(cls, graph: MolecularGraph, labels: dict[int, str] | None = None,
              position_variations: Iterable[PositionVariation] = (),
              frequency_variations: Iterable[FrequencyVariation] = ()) -> MarkushStructure:
        """Attach ``labels`` (atom index -> label) to ``graph`` and wrap it."""
        labels = dict(labels or {})
        for i, atom in enumerate(graph.atoms):
            if atom.variable_label is not None and i not in labels:
                labels[i] = atom.variable_label
        graph = relabel(graph, labels)
        return cls(
            graph,
            tuple(VariableGroup(i, lab) for i, lab in sorted(labels.items())),
            tuple(position_variations),
            tuple(frequency_variations),
        )

    @property
    def labels(self) -> list[str]:
        return [vg.label for vg in self.variable_groups]

    @property
    def frequency_labels(self) -> list[str]:
        return [fv.label for fv in self.frequency_variations if fv.label]

    @property
    def has_features(self) -> bool:
        return bool(self.variable_groups or self.position_variations or self.frequency_variations)

    def permute(self, order: Sequence[int]) -> MarkushStructure:
        """Reorder atoms so new atom ``k`` is old atom ``order[k]``."""
        graph = self.graph.permute(order)
        new = {old: k for k, old in enumerate(order)}
        return MarkushStructure(
            graph,
            tuple(VariableGroup(new[vg.atom_index], vg.label) for vg in self.variable_groups),
            tuple(PositionVariation(new[pv.endpoint_atom], tuple(new[c] for c in pv.candidate_atoms))
                  for pv in self.position_variations),
            tuple(FrequencyVariation(tuple(new[a] for a in fv.atoms), fv.label, fv.connectivity)
                  for fv in self.frequency_variations),
        )


# --------------------------------------------------------------------------
# parsing

_M_RE = re.compile(r"m:(\d+):(\d+(?:\.\d+)*)", re.ASCII)
_SG_RE = re.compile(r"Sg:([A-Za-z]+):(\d+(?:,\d+)*):([^:,|]*):([A-Za-z]*)", re.ASCII)


def _split_cxsmiles(text: str) -> tuple[str, str | None]:
    text = text.strip()
    bar = text.find("|")
    if bar == -1:
        return text, None
    smiles = text[:bar].rstrip()
    block = text[bar:]
    if len(block) < 2 or not block.endswith("|"):
        raise MalformedExtension("extension block must be enclosed in '|'")
    return smiles, block[1:-1]


def parse_extension(block: str, n_atoms: int):
    """Parse the inside of ``|...|`` into (labels, m sections, Sg sections)."""
    labels: list[str] | None = None
    pvs: list[PositionVariation] = []
    fvs: list[FrequencyVariation] = []
    pos = 0

    def check(idx: int) -> int:
        if not 0 <= idx < n_atoms:
            raise IndexOutOfRange(f"atom index {idx} out of range for {n_atoms} atoms")
        return idx

    while pos < len(block):
        if block[pos] == "$":
            end = block.find("$", pos + 1)
            if end == -1:
                raise MalformedExtension("unterminated '$' label field")
            if labels is not None:
                raise MalformedExtension("more than one '$' label field")
            labels = block[pos + 1:end].split(";")
            if len(labels) > n_atoms:
                raise LabelCountMismatch(f"{len(labels)} labels for {n_atoms} atoms")
            pos = end + 1
        elif block.startswith("m:", pos):
            m = _M_RE.match(block, pos)
            if m is None:
                raise MalformedExtension(f"malformed m section at {block[pos:pos + 20]!r}")
            endpoint = check(int(m.group(1)))
            cands = [check(int(x)) for x in m.group(2).split(".")]
            try:
                pvs.append(PositionVariation(endpoint, tuple(cands)))
            except ValueError as exc:
                raise MalformedExtension(str(exc)) from None
            pos = m.end()
        elif block.startswith("Sg:", pos):
            m = _SG_RE.match(block, pos)
            if m is None:
                raise MalformedExtension(f"malformed Sg section at {block[pos:pos + 20]!r}")
            if m.group(1) != "n":
                raise UnknownField(f"unsupported Sg subtype {m.group(1)!r}")
            if m.group(4) not in CONNECTIVITIES:
                raise MalformedExtension(f"unknown Sg connectivity {m.group(4)!r}")
            atoms = [check(int(x)) for x in m.group(2).split(",")]
            try:
                fvs.append(FrequencyVariation(tuple(atoms), m.group(3), m.group(4)))
            except ValueError as exc:
                raise MalformedExtension(str(exc)) from None
            pos = m.end()
        else:
            raise UnknownField(f"unknown extension field at {block[pos:pos + 20]!r}")
        if pos < len(block):
            if block[pos] != ",":
                raise MalformedExtension(f"expected ',' at {block[pos:pos + 20]!r}")
            pos += 1
            if pos == len(block):
                raise MalformedExtension("trailing ',' in extension block")
    return labels or [], pvs, fvs


def parse_cxsmiles(text: str) -> MarkushStructure:
    smiles, block = _split_cxsmiles(text)
    graph = parse_smiles(smiles)
    if block is None:
        return MarkushStructure(graph)
    labels, pvs, fvs = parse_extension(block, len(graph.atoms))
    label_map = {}
    for i, lab in enumerate(labels):
        if not lab:
            continue
        if graph.atoms[i].element != WILDCARD:
            raise MalformedExtension(f"label {lab!r} on non-wildcard atom {i}")
        label_map[i] = lab
    return MarkushStructure.build(graph, label_map, pvs, fvs)


# --------------------------------------------------------------------------
# writing

def _sorted_features(ms: MarkushStructure):
    pvs = sorted(ms.position_variations, key=lambda p: (p.endpoint_atom, p.candidate_atoms))
    fvs = sorted(ms.frequency_variations, key=lambda f: (f.atoms[0], f.atoms, f.label, f.connectivity))
    return pvs, fvs


def extension_fields(ms: MarkushStructure, include_labels: bool = True) -> list[str]:
    """Extension fields in write order: labels, then ``m``, then ``Sg``."""
    fields = []
    if include_labels and ms.variable_groups:
        labels = [""] * (max(vg.atom_index for vg in ms.variable_groups) + 1)
        for vg in ms.variable_groups:
            labels[vg.atom_index] = vg.label
        fields.append("$" + ";".join(labels) + "$")
    pvs, fvs = _sorted_features(ms)
    for pv in pvs:
        fields.append(f"m:{pv.endpoint_atom}:" + ".".join(map(str, pv.candidate_atoms)))
    for fv in fvs:
        fields.append(f"Sg:n:{','.join(map(str, fv.atoms))}:{fv.label}:{fv.connectivity}")
    return fields


def in_writing_order(ms: MarkushStructure) -> MarkushStructure:
    """Renumber atoms so that they follow the order they are written in."""
    _, emitted = smiles_lexemes(ms.graph)
    if emitted == list(range(len(emitted))):
        return ms
    return ms.permute(emitted)


def write_cxsmiles(ms: MarkushStructure) -> str:
    ms = in_writing_order(ms)
    lexemes, _ = smiles_lexemes(ms.graph)
    smiles = "".join(lex for lex, _ in lexemes)
    fields = extension_fields(ms)
    if not fields:
        return smiles
    return f"{smiles} |{','.join(fields)}|"


# --------------------------------------------------------------------------
# canonical form and Markush features removal

def strip_markush(ms: MarkushStructure) -> MolecularGraph:
    """Backbone without variable-group atoms or wildcard ``m`` endpoints."""
    drop = {vg.atom_index for vg in ms.variable_groups}
    for pv in ms.position_variations:
        if ms.graph.atoms[pv.endpoint_atom].element == WILDCARD:
            drop.add(pv.endpoint_atom)
    if not drop:
        return ms.graph
    graph, _ = ms.graph.subgraph(i for i in range(len(ms.graph.atoms)) if i not in drop)
    return graph


def markush_ranks(ms: MarkushStructure, with_labels: bool = True) -> list[int]:
    """Canonical atom ranks taking ``m``/``Sg`` sections into account.

    Sections are refined as extra nodes linked to the atoms they mention,
    so symmetric atoms are only tied if the sections are symmetric too.
    """
    g = ms.graph
    n = len(g.atoms)
    invariants: list[tuple] = []
    for i, atom in enumerate(g.atoms):
        inv = atom_invariant(atom, g.degree(i))
        if not with_labels:
            inv = inv[:4] + ("",) + inv[5:]
        invariants.append((0,) + inv)
    adjacency: list[list[tuple[int, int]]] = [[(j, int(o)) for j, o in g.neighbors(i)] for i in range(n)]

    def add_node(inv: tuple, links: list[tuple[int, int]]):
        k = len(invariants)
        invariants.append(inv)
        adjacency.append(list(links))
        for atom, kind in links:
            adjacency[atom].append((k, kind))

    for pv in ms.position_variations:
        add_node((1, "m", "", 0, 0, "", 0, 0),
                 [(pv.endpoint_atom, 10)] + [(c, 11) for c in pv.candidate_atoms])
    for fv in ms.frequency_variations:
        add_node((2, "Sg", fv.label, 0, 0, fv.connectivity, 0, 0), [(a, 12) for a in fv.atoms])
    ranks = refine_ranks(invariants, adjacency)
    atom_ranks = ranks[:n]
    order = sorted(range(n), key=atom_ranks.__getitem__)
    out = [0] * n
    for r, i in enumerate(order):
        out[i] = r
    return out


def canonicalize_markush(ms: MarkushStructure) -> MarkushStructure:
    """Permutation-invariant form: canonical atom order, sorted sections."""
    if not ms.graph.atoms:
        return ms
    ranks = markush_ranks(ms)
    _, emitted = smiles_lexemes(ms.graph, ranks_to_order(ranks))
    out = ms.permute(emitted)
    pvs, fvs = _sorted_features(out)
    return MarkushStructure(out.graph, out.variable_groups, tuple(pvs), tuple(fvs))


def markush_equal(a: MarkushStructure, b: MarkushStructure) -> bool:
    return canonicalize_markush(a) == canonicalize_markush(b)


def canonical_cxsmiles(ms: MarkushStructure) -> str:
    return write_cxsmiles(canonicalize_markush(ms))


def stripped_canonical_smiles(ms: MarkushStructure) -> str:
    return canonical_smiles(strip_markush(ms))
