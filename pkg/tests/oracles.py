"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools

import networkx as nx

from markushkit.chemgraph import BondOrder, MolecularGraph


def to_nx(g: MolecularGraph) -> nx.Graph:
    out = nx.Graph()
    for i, a in enumerate(g.atoms):
        out.add_node(i, atom=a)
    for b in g.bonds:
        out.add_edge(b.a, b.b, order=b.order)
    return out


def isomorphic(a: MolecularGraph, b: MolecularGraph) -> bool:
    return nx.is_isomorphic(to_nx(a), to_nx(b),
                            node_match=lambda x, y: x["atom"] == y["atom"],
                            edge_match=lambda x, y: x["order"] == y["order"])


_SYMBOL = {BondOrder.SINGLE: "-", BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#", BondOrder.AROMATIC: ":"}


def _fnv(data: bytes) -> int:
    h = 0xCBF29CE484222325 ^ 0x5EED
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) % 2 ** 64
    return h


def brute_force_bits(g: MolecularGraph, max_len: int = 7, n_bits: int = 2048) -> set[int]:
    """Paths as bond subsets: every subset of <= max_len bonds forming a simple path."""
    def tok(i):
        a = g.atoms[i]
        return a.element.lower() if a.is_aromatic else a.element

    def key(seq):
        def read(s):
            out = [tok(s[0])]
            for u, v in zip(s, s[1:]):
                out += [_SYMBOL[g.bond_order(u, v)], tok(v)]
            return " ".join(out)
        return min(read(seq), read(seq[::-1]))

    keys = {key([i]) for i in range(len(g))}
    bonds = list(g.bonds)
    for k in range(1, max_len + 1):
        for subset in itertools.combinations(bonds, k):
            deg: dict[int, int] = {}
            for b in subset:
                deg[b.a] = deg.get(b.a, 0) + 1
                deg[b.b] = deg.get(b.b, 0) + 1
            # a simple path: k+1 vertices, degrees <= 2, connected, two ends
            if len(deg) != k + 1 or max(deg.values()) > 2:
                continue
            sub = nx.Graph([(b.a, b.b) for b in subset])
            if not nx.is_connected(sub):
                continue
            ends = [v for v, d in deg.items() if d == 1]
            seq = nx.shortest_path(sub, ends[0], ends[1])
            keys.add(key(seq))
    return {_fnv(k.encode()) % n_bits for k in keys}


def perturb_record(record: dict, mode: str) -> dict:
    """A prediction derived from a ground-truth record.

    ``exact``: unchanged; ``table``: one substituent dropped or replaced;
    ``structure``: one atom changed; ``both``: both; ``empty``: unreadable.
    """
    from markushkit.chemgraph import Atom
    from markushkit.cxsmiles import MarkushStructure, canonical_cxsmiles, parse_cxsmiles

    pred = {"id": record["id"], "cxsmiles": record["cxsmiles"], "table": dict(record["table"])}
    if mode == "empty":
        return {"id": record["id"], "optimized": ""}
    if mode in ("table", "both"):
        table = {k: list(v) for k, v in pred["table"].items()}
        if table:
            k = sorted(table)[0]
            table[k] = table[k][1:] or ["not-a-substituent"]
        else:
            table = {"R99": ["H"]}
        pred["table"] = table
    if mode in ("structure", "both"):
        ms = parse_cxsmiles(record["cxsmiles"])
        atoms = list(ms.graph.atoms)
        k = next((i for i, a in enumerate(atoms) if a.element == "C" and not a.is_aromatic), None)
        if k is None:
            pred["cxsmiles"] = "CCCCCCCCCCCC"
        else:
            atoms[k] = Atom("Si")
            pred["cxsmiles"] = canonical_cxsmiles(MarkushStructure(
                ms.graph.with_atoms(atoms), ms.variable_groups, ms.position_variations,
                ms.frequency_variations))
    return pred
