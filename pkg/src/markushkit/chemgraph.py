"""
Molecular graphs, SMILES reading/writing, canonical ranking, valence
accounting and a linear-path fingerprint.

Atoms are stored in SMILES reading order. Everything here is immutable; a
"modified" graph is always a new object.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

WILDCARD = "*"

ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co
    Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I
    Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au
    Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db
    Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()
)
ORGANIC_SUBSET = frozenset("B C N O P S F Cl Br I".split())
AROMATIC_ORGANIC = frozenset("B C N O P S".split())
AROMATIC_BRACKET = frozenset("B C N O P S Se As Te".split())

VALENCES: dict[str, tuple[int, ...]] = {
    "H": (1,),
    "B": (3,),
    "C": (4,),
    "Si": (4,),
    "N": (3, 5),
    "P": (3, 5),
    "As": (3, 5),
    "O": (2,),
    "S": (2, 4, 6),
    "Se": (2, 4, 6),
    "Te": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}
_ELECTRON_RICH = frozenset("N P As O S Se Te F Cl Br I".split())


class SmilesError(ValueError):
    """Base class for SMILES syntax errors."""


class UnbalancedRing(SmilesError):
    pass


class UnbalancedBranch(SmilesError):
    pass


class UnknownSymbol(SmilesError):
    pass


class EmptyInput(SmilesError):
    pass


class InvalidPermutation(ValueError):
    pass


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def symbol(self) -> str:
        return _BOND_SYMBOLS[self]

    @property
    def valence(self) -> float:
        return 1.5 if self is BondOrder.AROMATIC else float(self.value)


_BOND_SYMBOLS = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}
_SYMBOL_BONDS = {v: k for k, v in _BOND_SYMBOLS.items()}


@dataclass(frozen=True)
class Atom:
    element: str
    is_aromatic: bool = False
    formal_charge: int = 0
    explicit_h_count: int | None = None
    isotope: int | None = None
    variable_label: str | None = None

    def __post_init__(self):
        if self.variable_label is not None:
            if self.element != WILDCARD:
                raise ValueError(f"variable label {self.variable_label!r} on non-wildcard atom")
            if not self.variable_label:
                raise ValueError("empty variable label")
            if self.formal_charge:
                raise ValueError("variable-group atoms cannot be charged")
        if self.explicit_h_count is not None and self.explicit_h_count < 0:
            raise ValueError("negative hydrogen count")
        if self.isotope is not None and self.isotope <= 0:
            raise ValueError("isotope must be positive")

    @property
    def is_variable_group(self) -> bool:
        return self.variable_label is not None

    @property
    def is_wildcard(self) -> bool:
        return self.element == WILDCARD

    @property
    def is_bracket(self) -> bool:
        """True when the atom cannot be written in the organic subset."""
        if self.element == WILDCARD:
            return bool(self.formal_charge or self.isotope or self.explicit_h_count is not None)
        if self.element not in ORGANIC_SUBSET:
            return True
        if self.is_aromatic and self.element not in AROMATIC_ORGANIC:
            return True
        return bool(self.formal_charge or self.isotope is not None or self.explicit_h_count is not None)

    def smiles(self) -> str:
        sym = self.element.lower() if self.is_aromatic else self.element
        if not self.is_bracket:
            return sym
        out = ["["]
        if self.isotope is not None:
            out.append(str(self.isotope))
        out.append(sym)
        if self.explicit_h_count:
            out.append("H" if self.explicit_h_count == 1 else f"H{self.explicit_h_count}")
        if self.formal_charge:
            sign = "+" if self.formal_charge > 0 else "-"
            mag = abs(self.formal_charge)
            out.append(sign if mag == 1 else f"{sign}{mag}")
        out.append("]")
        return "".join(out)


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("self-bond")
        if self.a > self.b:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)
        object.__setattr__(self, "order", BondOrder(self.order))

    def other(self, i: int) -> int:
        return self.b if i == self.a else self.a


@dataclass(frozen=True)
class MolecularGraph:
    """Atoms in SMILES order plus undirected bonds.

    Bonds are normalized on construction (``a < b``, sorted), so two graphs
    with the same atom order compare equal field by field.
    """

    atoms: tuple[Atom, ...] = ()
    bonds: tuple[Bond, ...] = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        bonds = tuple(sorted((b if isinstance(b, Bond) else Bond(*b) for b in self.bonds),
                             key=lambda b: (b.a, b.b)))
        n = len(atoms)
        seen = set()
        for b in bonds:
            if b.b >= n or b.a < 0:
                raise ValueError(f"bond ({b.a}, {b.b}) out of range for {n} atoms")
            if (b.a, b.b) in seen:
                raise ValueError(f"duplicate bond ({b.a}, {b.b})")
            seen.add((b.a, b.b))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "bonds", bonds)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def _adjacency(self) -> tuple[tuple[tuple[int, BondOrder], ...], ...]:
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in self.atoms]
        for b in self.bonds:
            adj[b.a].append((b.b, b.order))
            adj[b.b].append((b.a, b.order))
        return tuple(tuple(sorted(x)) for x in adj)

    def neighbors(self, i: int) -> tuple[tuple[int, BondOrder], ...]:
        return self._adjacency[i]

    def degree(self, i: int) -> int:
        return len(self._adjacency[i])

    def bond_order(self, i: int, j: int) -> BondOrder | None:
        for k, order in self._adjacency[i]:
            if k == j:
                return order
        return None

    def components(self) -> list[list[int]]:
        """Connected components, each sorted, ordered by smallest atom index."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            comp, stack = [], [start]
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self._adjacency[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(sorted(comp))
        return out

    @cached_property
    def ring_bonds(self) -> frozenset[tuple[int, int]]:
        """Bonds lying on at least one cycle (i.e. not bridges)."""
        n = len(self.atoms)
        disc = [-1] * n
        low = [0] * n
        bridges = set()
        timer = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self._adjacency[root]))]
            while stack:
                u, parent, it = stack[-1]
                advanced = False
                for v, _ in it:
                    if v == parent:
                        continue
                    if disc[v] == -1:
                        disc[v] = low[v] = timer
                        timer += 1
                        stack.append((v, u, iter(self._adjacency[v])))
                        advanced = True
                        break
                    low[u] = min(low[u], disc[v])
                if not advanced:
                    stack.pop()
                    if parent != -1:
                        low[parent] = min(low[parent], low[u])
                        if low[u] > disc[parent]:
                            bridges.add((min(u, parent), max(u, parent)))
        return frozenset((b.a, b.b) for b in self.bonds if (b.a, b.b) not in bridges)

    @cached_property
    def ring_atoms(self) -> frozenset[int]:
        return frozenset(i for pair in self.ring_bonds for i in pair)

    def permute(self, order: Sequence[int]) -> MolecularGraph:
        """Return the graph whose atom ``k`` is this graph's atom ``order[k]``."""
        order = list(order)
        if sorted(order) != list(range(len(self.atoms))):
            raise InvalidPermutation(f"{order} is not a permutation of {len(self.atoms)} atoms")
        new_index = {old: new for new, old in enumerate(order)}
        return MolecularGraph(
            tuple(self.atoms[i] for i in order),
            tuple(Bond(new_index[b.a], new_index[b.b], b.order) for b in self.bonds),
        )

    def subgraph(self, keep: Iterable[int]) -> tuple[MolecularGraph, dict[int, int]]:
        """Induced subgraph on ``keep`` (original order kept) and the old->new map."""
        keep = sorted(set(keep))
        mapping = {old: new for new, old in enumerate(keep)}
        bonds = tuple(Bond(mapping[b.a], mapping[b.b], b.order)
                      for b in self.bonds if b.a in mapping and b.b in mapping)
        return MolecularGraph(tuple(self.atoms[i] for i in keep), bonds), mapping

    def with_atoms(self, atoms: Sequence[Atom]) -> MolecularGraph:
        return MolecularGraph(tuple(atoms), self.bonds)

    def implicit_h_count(self, i: int) -> int:
        return implicit_hydrogens(self)[i]


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"(?P<bracket>\[[^\[\]]*\])"
    r"|(?P<organic>Cl|Br|[BCNOPSFI]|[bcnops]|\*)"
    r"|(?P<bond>[-=#:/\\])"
    r"|(?P<open>\()|(?P<close>\))"
    r"|(?P<ring>%\d\d|\d)"
    r"|(?P<dot>\.)",
    re.ASCII,
)
_BRACKET_RE = re.compile(
    r"^\[(?P<isotope>\d+)?"
    r"(?P<element>\*|se|as|te|[bcnops]|[A-Z][a-z]?)"
    r"(?P<chiral>@(?:@|TH[12]|AL[12]|SP[123]|TB\d\d?|OH\d\d?)?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>[+-]+\d*)?"
    r"(?::\d+)?\]$",
    re.ASCII,
)


def tokenize_smiles(text: str) -> list[str]:
    """Split a SMILES string into lexemes; raises UnknownSymbol on junk."""
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise UnknownSymbol(f"unexpected {text[pos]!r} at position {pos}")
        out.append(m.group())
        pos = m.end()
    return out


def parse_atom(lexeme: str) -> Atom:
    """Parse one atom lexeme (``C``, ``c``, ``*``, ``[13CH3+]``...)."""
    if not lexeme.startswith("["):
        if lexeme == WILDCARD:
            return Atom(WILDCARD)
        if lexeme.islower():
            if lexeme.capitalize() not in AROMATIC_ORGANIC:
                raise UnknownSymbol(f"unknown atom {lexeme!r}")
            return Atom(lexeme.capitalize(), is_aromatic=True)
        if lexeme not in ORGANIC_SUBSET:
            raise UnknownSymbol(f"unknown atom {lexeme!r}")
        return Atom(lexeme)
    m = _BRACKET_RE.match(lexeme)
    if m is None:
        raise UnknownSymbol(f"malformed bracket atom {lexeme!r}")
    sym = m.group("element")
    aromatic = sym.islower()
    element = sym.capitalize() if aromatic else sym
    if element != WILDCARD and element not in ELEMENTS:
        raise UnknownSymbol(f"unknown element {sym!r}")
    if aromatic and element not in AROMATIC_BRACKET:
        raise UnknownSymbol(f"{sym!r} cannot be aromatic")
    hcount = m.group("hcount")
    h = 0 if not hcount else (int(hcount[1:]) if len(hcount) > 1 else 1)
    charge = 0
    if m.group("charge"):
        c = m.group("charge")
        sign = 1 if c[0] == "+" else -1
        digits = c.lstrip("+-")
        if digits:
            if len(c) - len(digits) != 1:
                raise UnknownSymbol(f"malformed charge in {lexeme!r}")
            charge = sign * int(digits)
        else:
            if len(set(c)) != 1:
                raise UnknownSymbol(f"malformed charge in {lexeme!r}")
            charge = sign * len(c)
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    if element == "H" and h:
        raise UnknownSymbol("hydrogen atom with hydrogens")
    if element == WILDCARD and not (h or charge or isotope):
        # [*] and * are the same atom
        return Atom(WILDCARD)
    return Atom(element, aromatic, charge, h, isotope)


class _Builder:
    """Assemble a graph from SMILES lexemes.

    In lenient mode syntax problems are recorded in ``problems`` as
    ``(error class, message)`` and the offending lexeme is skipped.
    """

    def __init__(self, strict: bool = True):
        self.strict = strict
        self.atoms: list[Atom] = []
        self.bonds: dict[tuple[int, int], BondOrder] = {}
        self.problems: list[tuple[type, str]] = []
        self._prev: int | None = None
        self._pending: str | None = None
        self._stack: list[int | None] = []
        self._rings: dict[str, tuple[int, str | None]] = {}

    def _fail(self, cls: type, msg: str):
        if self.strict:
            raise cls(msg)
        self.problems.append((cls, msg))

    def _implicit(self, i: int, j: int) -> BondOrder:
        if self.atoms[i].is_aromatic and self.atoms[j].is_aromatic:
            return BondOrder.AROMATIC
        return BondOrder.SINGLE

    def _bond(self, i: int, j: int, sym: str | None) -> None:
        key = (min(i, j), max(i, j))
        if i == j or key in self.bonds:
            self._fail(UnbalancedRing, f"ring closure duplicates bond {key}")
            return
        self.bonds[key] = _SYMBOL_BONDS[sym] if sym else self._implicit(i, j)

    def add_atom(self, atom: Atom) -> int:
        idx = len(self.atoms)
        self.atoms.append(atom)
        if self._prev is not None:
            self._bond(self._prev, idx, self._pending)
        elif self._pending:
            self._fail(UnknownSymbol, "bond symbol without a preceding atom")
        self._prev = idx
        self._pending = None
        return idx

    def feed(self, lexeme: str) -> int | None:
        """Consume one lexeme; returns the new atom index for atom lexemes."""
        if lexeme in "-=#:/\\":
            if self._prev is None:
                self._fail(UnknownSymbol, f"bond {lexeme!r} without a preceding atom")
                return None
            if self._pending is not None:
                self._fail(UnknownSymbol, "two consecutive bond symbols")
            # stereo bonds are plain single bonds once stereo is dropped
            self._pending = None if lexeme in "/\\" else lexeme
            return None
        if lexeme == "(":
            if self._prev is None:
                self._fail(UnbalancedBranch, "branch without a preceding atom")
            self._stack.append(self._prev)
            return None
        if lexeme == ")":
            if not self._stack:
                self._fail(UnbalancedBranch, "unmatched ')'")
                return None
            if self._pending is not None:
                self._fail(UnknownSymbol, "dangling bond before ')'")
                self._pending = None
            self._prev = self._stack.pop()
            return None
        if lexeme == ".":
            if self._pending is not None:
                self._fail(UnknownSymbol, "dangling bond before '.'")
                self._pending = None
            self._prev = None
            return None
        if lexeme[0] == "%" or lexeme.isdigit():
            key = lexeme.lstrip("%") if lexeme[0] == "%" else lexeme
            if self._prev is None:
                self._fail(UnbalancedRing, f"ring bond {lexeme} without an atom")
                return None
            if key in self._rings:
                start, sym = self._rings.pop(key)
                if sym and self._pending and sym != self._pending:
                    self._fail(UnbalancedRing, f"conflicting bond symbols on ring {lexeme}")
                self._bond(start, self._prev, sym or self._pending)
            else:
                self._rings[key] = (self._prev, self._pending)
            self._pending = None
            return None
        try:
            atom = parse_atom(lexeme)
        except SmilesError as exc:
            self._fail(type(exc), str(exc))
            return None
        return self.add_atom(atom)

    def finish(self) -> MolecularGraph:
        if self._pending is not None:
            self._fail(UnknownSymbol, "dangling bond at end of input")
        if self._stack:
            self._fail(UnbalancedBranch, f"{len(self._stack)} unclosed branch(es)")
        if self._rings:
            self._fail(UnbalancedRing, f"unclosed ring bond(s) {sorted(self._rings)}")
        return MolecularGraph(tuple(self.atoms),
                              tuple(Bond(a, b, o) for (a, b), o in self.bonds.items()))


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string. Stereo markers are accepted and dropped."""
    text = text.strip()
    if not text:
        raise EmptyInput("empty SMILES")
    builder = _Builder(strict=True)
    for lexeme in tokenize_smiles(text):
        builder.feed(lexeme)
    return builder.finish()


# --------------------------------------------------------------------------
# writing

def _bond_symbol(graph: MolecularGraph, i: int, j: int, order: BondOrder) -> str:
    both_aromatic = graph.atoms[i].is_aromatic and graph.atoms[j].is_aromatic
    if order is BondOrder.SINGLE:
        return "-" if both_aromatic else ""
    if order is BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return order.symbol


def _ring_label(n: int) -> str:
    return str(n) if n < 10 else f"%{n}"


def smiles_lexemes(graph: MolecularGraph, order: Sequence[int] | None = None
                   ) -> tuple[list[tuple[str, int | None]], list[int]]:
    """Depth-first SMILES lexemes plus the atom output order.

    Each lexeme is paired with its atom index (``None`` for non-atoms).
    ``order`` gives traversal priority: ``order[0]`` is visited first and
    lower-priority neighbours become later branches.
    """
    n = len(graph.atoms)
    if order is None:
        rank = list(range(n))
    else:
        order = list(order)
        if sorted(order) != list(range(n)):
            raise InvalidPermutation(f"{order} is not a permutation of {n} atoms")
        rank = [0] * n
        for k, i in enumerate(order):
            rank[i] = k

    visited = [False] * n
    children: list[list[int]] = [[] for _ in range(n)]
    closures: list[list[tuple[int, BondOrder]]] = [[] for _ in range(n)]
    used: set[tuple[int, int]] = set()
    roots = []
    for start in sorted(range(n), key=rank.__getitem__):
        if visited[start]:
            continue
        roots.append(start)
        visited[start] = True
        stack = [(start, iter(sorted(graph.neighbors(start), key=lambda x: rank[x[0]])))]
        while stack:
            u, it = stack[-1]
            for v, order_uv in it:
                key = (min(u, v), max(u, v))
                if key in used:
                    continue
                used.add(key)
                if visited[v]:
                    # back edge: opened at v (ancestor), closed at u
                    closures[v].append((u, order_uv))
                    closures[u].append((v, order_uv))
                    continue
                visited[v] = True
                children[u].append(v)
                stack.append((v, iter(sorted(graph.neighbors(v), key=lambda x: rank[x[0]]))))
                break
            else:
                stack.pop()

    out: list[tuple[str, int | None]] = []
    emitted: list[int] = []
    position = [-1] * n
    open_rings: dict[tuple[int, int], int] = {}
    free: list[int] = []
    next_label = 1

    def write_atom(u: int) -> None:
        nonlocal next_label
        position[u] = len(emitted)
        emitted.append(u)
        out.append((graph.atoms[u].smiles(), u))
        closing = sorted((v for v, _ in closures[u] if position[v] != -1 and v != u),
                         key=lambda v: position[v])
        opening = sorted((x for x in closures[u] if position[x[0]] == -1), key=lambda x: rank[x[0]])
        for v in closing:
            label = open_rings.pop((v, u))
            out.append((_ring_label(label), None))
            free.append(label)
            free.sort()
        for v, bo in opening:
            if free:
                label = free.pop(0)
            else:
                label = next_label
                next_label += 1
            open_rings[(u, v)] = label
            sym = _bond_symbol(graph, u, v, bo)
            if sym:
                out.append((sym, None))
            out.append((_ring_label(label), None))

    def walk(u: int) -> None:
        write_atom(u)
        kids = children[u]
        for k, v in enumerate(kids):
            branch = k < len(kids) - 1
            if branch:
                out.append(("(", None))
            sym = _bond_symbol(graph, u, v, graph.bond_order(u, v))
            if sym:
                out.append((sym, None))
            walk(v)
            if branch:
                out.append((")", None))

    for k, root in enumerate(roots):
        if k:
            out.append((".", None))
        walk(root)
    return out, emitted


def write_smiles(graph: MolecularGraph, order: Sequence[int] | None = None) -> str:
    """Write ``graph`` as SMILES.

    Without ``order`` a graph parsed from SMILES is written with its atoms
    in their original order.
    """
    lexemes, _ = smiles_lexemes(graph, order)
    return "".join(lex for lex, _ in lexemes)


def write_smiles_with_order(graph: MolecularGraph, order: Sequence[int] | None = None
                            ) -> tuple[str, list[int]]:
    """Like :func:`write_smiles`, also returning the atom output order."""
    lexemes, emitted = smiles_lexemes(graph, order)
    return "".join(lex for lex, _ in lexemes), emitted


# --------------------------------------------------------------------------
# canonical ranking

def _dense_ranks(keys: Sequence) -> list[int]:
    lookup = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [lookup[k] for k in keys]


def refine_ranks(invariants: Sequence, adjacency: Sequence[Sequence[tuple[int, object]]]
                 ) -> list[int]:
    """Iterative neighbourhood refinement with forced tie splitting.

    ``adjacency[i]`` lists ``(neighbour, edge label)`` pairs; edge labels
    must be mutually comparable. Returns a rank per node, all distinct.
    Fully tied nodes are split by individualizing the lowest original
    index in the lowest tied class, then refining again.
    """
    n = len(invariants)
    ranks = _dense_ranks(invariants)

    def refine(ranks: list[int]) -> list[int]:
        n_classes = len(set(ranks))
        while True:
            sig = [(ranks[i], tuple(sorted((ranks[j], lab) for j, lab in adjacency[i])))
                   for i in range(n)]
            new = _dense_ranks(sig)
            n_new = len(set(new))
            ranks = new
            if n_new == n_classes:
                return ranks
            n_classes = n_new

    ranks = refine(ranks)
    while len(set(ranks)) < n:
        counts: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            counts.setdefault(r, []).append(i)
        tied_rank = min(r for r, members in counts.items() if len(members) > 1)
        chosen = min(counts[tied_rank])
        ranks = refine([2 * r + (1 if r == tied_rank and i != chosen else 0)
                        for i, r in enumerate(ranks)])
    return ranks


def atom_invariant(atom: Atom, degree: int) -> tuple:
    return (
        atom.element,
        atom.is_aromatic,
        atom.formal_charge,
        degree,
        atom.variable_label or "",
        atom.isotope or 0,
        -1 if atom.explicit_h_count is None else atom.explicit_h_count,
    )


def canonical_ranks(graph: MolecularGraph) -> list[int]:
    """Canonical rank of every atom (``ranks[i]`` is atom ``i``'s rank)."""
    invariants = [atom_invariant(a, graph.degree(i)) for i, a in enumerate(graph.atoms)]
    adjacency = [[(j, int(o)) for j, o in graph.neighbors(i)] for i in range(len(graph))]
    return refine_ranks(invariants, adjacency)


def ranks_to_order(ranks: Sequence[int]) -> list[int]:
    return sorted(range(len(ranks)), key=ranks.__getitem__)


def canonical_order(graph: MolecularGraph) -> list[int]:
    """Atom order of the canonical SMILES (a permutation of atom indices)."""
    _, emitted = smiles_lexemes(graph, ranks_to_order(canonical_ranks(graph)))
    return emitted


def canonical_smiles(graph: MolecularGraph) -> str:
    if not graph.atoms:
        return ""
    return write_smiles(graph, ranks_to_order(canonical_ranks(graph)))


# --------------------------------------------------------------------------
# valence

def allowed_valences(atom: Atom) -> tuple[int, ...] | None:
    base = VALENCES.get(atom.element)
    if base is None:
        return None
    c = atom.formal_charge
    if not c:
        return base
    if atom.element in _ELECTRON_RICH:
        shifted = tuple(v + c for v in base)
    elif atom.element == "B":
        shifted = tuple(v - c for v in base)
    else:
        shifted = tuple(v - abs(c) for v in base)
    shifted = tuple(v for v in shifted if v >= 0)
    return shifted or (0,)


def _needs_double(graph: MolecularGraph, i: int) -> bool:
    atom = graph.atoms[i]
    allowed = allowed_valences(atom)
    if allowed is None:
        return False
    base = 0
    for _, order in graph.neighbors(i):
        base += 1 if order is BondOrder.AROMATIC else int(order)
    if atom.is_bracket:
        return base + (atom.explicit_h_count or 0) + 1 in allowed
    fitting = [v for v in allowed if v >= base]
    return bool(fitting) and base + 1 <= min(fitting)


def _match(nodes: list[int], edges: dict[int, list[int]]) -> dict[int, int] | None:
    """Perfect matching of ``nodes`` along ``edges`` by ordered backtracking."""
    mate: dict[int, int] = {}

    def solve(k: int) -> bool:
        while k < len(nodes) and nodes[k] in mate:
            k += 1
        if k == len(nodes):
            return True
        u = nodes[k]
        for v in edges.get(u, ()):
            if v not in mate:
                mate[u], mate[v] = v, u
                if solve(k + 1):
                    return True
                del mate[u], mate[v]
        return False

    return dict(mate) if solve(0) else None


def kekule_assignment(graph: MolecularGraph) -> dict[tuple[int, int], int]:
    """Integer order (1 or 2) for every aromatic bond that can be kekulized.

    Aromatic systems without a perfect matching are left out of the result.
    """
    aromatic = [(b.a, b.b) for b in graph.bonds if b.order is BondOrder.AROMATIC]
    if not aromatic:
        return {}
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in aromatic:
        parent[find(a)] = find(b)
    systems: dict[int, list[tuple[int, int]]] = {}
    for a, b in aromatic:
        systems.setdefault(find(a), []).append((a, b))

    result: dict[tuple[int, int], int] = {}
    for bonds in systems.values():
        atoms = sorted({x for pair in bonds for x in pair})
        needy = [i for i in atoms if _needs_double(graph, i)]
        needy_set = set(needy)
        edges: dict[int, list[int]] = {}
        for a, b in bonds:
            if a in needy_set and b in needy_set:
                edges.setdefault(a, []).append(b)
                edges.setdefault(b, []).append(a)
        for k in edges:
            edges[k].sort()
        mate = _match(needy, edges)
        if mate is None:
            continue
        for a, b in bonds:
            result[(a, b)] = 2 if mate.get(a) == b else 1
    return result


def _bond_sums(graph: MolecularGraph) -> list[int]:
    kek = kekule_assignment(graph)
    sums = [0.0] * len(graph.atoms)
    for b in graph.bonds:
        if b.order is BondOrder.AROMATIC:
            v = kek.get((b.a, b.b), 1.5)
        else:
            v = int(b.order)
        sums[b.a] += v
        sums[b.b] += v
    return [int(-(-s // 1)) for s in sums]


def implicit_hydrogens(graph: MolecularGraph) -> list[int]:
    sums = _bond_sums(graph)
    out = []
    for atom, s in zip(graph.atoms, sums):
        if atom.is_wildcard or atom.is_bracket:
            out.append(0)
            continue
        allowed = allowed_valences(atom) or ()
        fitting = [v for v in allowed if v >= s]
        out.append(min(fitting) - s if fitting else 0)
    return out


def total_hydrogens(graph: MolecularGraph) -> list[int]:
    imp = implicit_hydrogens(graph)
    return [h + (a.explicit_h_count or 0) for h, a in zip(imp, graph.atoms)]


def valence_errors(graph: MolecularGraph) -> list[tuple[int, str]]:
    """Atoms whose bonds plus hydrogens exceed every allowed valence."""
    sums = _bond_sums(graph)
    errors = []
    for i, (atom, s) in enumerate(zip(graph.atoms, sums)):
        if atom.is_wildcard:
            continue
        allowed = allowed_valences(atom)
        if allowed is None:
            continue
        total = s + (atom.explicit_h_count or 0)
        if total > max(allowed):
            errors.append((i, f"{atom.element} valence {total} exceeds {max(allowed)}"))
    return errors


def open_valence(graph: MolecularGraph, i: int) -> int:
    """Number of hydrogens on atom ``i`` that a new single bond could replace."""
    atom = graph.atoms[i]
    if atom.is_bracket:
        return atom.explicit_h_count or 0
    return implicit_hydrogens(graph)[i]


# --------------------------------------------------------------------------
# fingerprint

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1
FINGERPRINT_SEED = 0x5EED


def fnv1a_64(data: bytes, seed: int = FINGERPRINT_SEED) -> int:
    """64-bit FNV-1a, with the seed folded into the offset basis."""
    h = _FNV_OFFSET ^ (seed & _MASK64)
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class BitFingerprint:
    on_bits: frozenset[int]
    n_bits: int = 2048

    @property
    def n_set(self) -> int:
        return len(self.on_bits)

    @property
    def bits(self) -> np.ndarray:
        arr = np.zeros(self.n_bits, dtype=bool)
        if self.on_bits:
            arr[sorted(self.on_bits)] = True
        return arr


def atom_path_token(atom: Atom) -> str:
    return atom.element.lower() if atom.is_aromatic else atom.element


def path_key(graph: MolecularGraph, path: Sequence[int]) -> str:
    """Direction-independent text key of a linear atom path."""

    def reading(p):
        parts = [atom_path_token(graph.atoms[p[0]])]
        for u, v in zip(p, p[1:]):
            parts.append(graph.bond_order(u, v).symbol)
            parts.append(atom_path_token(graph.atoms[v]))
        return " ".join(parts)

    return min(reading(path), reading(path[::-1]))


def path_bit(key: str, n_bits: int) -> int:
    return fnv1a_64(key.encode("utf-8")) % n_bits


def enumerate_paths(graph: MolecularGraph, max_path_len: int = 7) -> list[tuple[int, ...]]:
    """Every simple path of 0..max_path_len bonds, each listed once."""
    paths: list[tuple[int, ...]] = []
    for start in range(len(graph.atoms)):
        paths.append((start,))
        stack = [(start,)]
        while stack:
            path = stack.pop()
            if len(path) - 1 == max_path_len:
                continue
            for v, _ in graph.neighbors(path[-1]):
                if v in path:
                    continue
                ext = path + (v,)
                if start < v:
                    paths.append(ext)
                stack.append(ext)
    return paths


def path_fingerprint(graph: MolecularGraph, max_path_len: int = 7, n_bits: int = 2048
                     ) -> BitFingerprint:
    """Hashed fingerprint of all linear paths up to ``max_path_len`` bonds."""
    keys = {path_key(graph, p) for p in enumerate_paths(graph, max_path_len)}
    return BitFingerprint(frozenset(path_bit(k, n_bits) for k in keys), n_bits)


def tanimoto(a: BitFingerprint, b: BitFingerprint) -> float:
    """Tanimoto coefficient in [0, 1]; two empty fingerprints give 1."""
    union = len(a.on_bits | b.on_bits)
    if not union:
        return 1.0
    return len(a.on_bits & b.on_bits) / union


def relabel(graph: MolecularGraph, labels: dict[int, str | None]) -> MolecularGraph:
    """Copy of ``graph`` with the given atoms' variable labels replaced."""
    atoms = list(graph.atoms)
    for i, label in labels.items():
        atoms[i] = replace(atoms[i], variable_label=label)
    return graph.with_atoms(atoms)
