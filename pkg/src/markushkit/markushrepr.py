"""
Compact token representation of a Markush structure and its substituent
table.

The backbone is the SMILES with labelled wildcards written inline as
special atoms, every atom followed by its index, then the ``m``/``Sg``
sections (no ``$...$`` field, no spaces, no closing ``|``). The table part
holds the grouped, integer-compressed substituent table.

Text form (one string, no separators between tokens)::

    <C><i>0</i><C><i>1</i>(<=><O><i>2</i>)<*R1><i>3</i>|m:3:0.1<t><g><l>R1<s>methyl<s>ethyl

Token renderings:

* chem atom: ``<`` + SMILES atom lexeme + ``>``; a labelled wildcard is
  ``<*`` + label + ``>``
* chem bond: ``<->``, ``<=>``, ``<#>``, ``<:>`` (implicit bonds have no token)
* structural: ``(`` ``)`` ``.``, ring closures ``1``..``9`` / ``%nn``;
  in the extension ``|`` ``:`` ``.`` ``,`` and the keywords ``m``, ``Sg``
* index: ``<i>``, one token per decimal digit, ``</i>``
* table: ``<t>`` opens the table, ``<g>`` a group, ``<l>`` precedes each
  label and ``<s>`` each substituent; ``&`` and ``<`` inside table text are
  escaped as ``&amp;`` and ``&lt;``
"""

from __future__ import annotations

import re
import warnings
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

from .chemgraph import Atom, MolecularGraph, WILDCARD, _Builder, parse_atom, smiles_lexemes, SmilesError
from .cxsmiles import (
    CONNECTIVITIES,
    FrequencyVariation,
    MarkushStructure,
    PositionVariation,
    in_writing_order,
)

TOKEN_KINDS = ("chem_atom", "chem_bond", "structural", "index_open", "index_close",
               "digit", "table", "text")
DIAGNOSTIC_KINDS = ("BadIndex", "DuplicateIndex", "UnknownToken", "TruncatedSection", "TableSyntax")
RANGE_THRESHOLD = 3
_FORBIDDEN_LABEL_CHARS = set("<>|,;:$") | {" ", "\t", "\n"}


class LabelNotInStructure(UserWarning):
    """A table label that no variable group or repeat label uses."""


class OverlappingLabelSets(ValueError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    text: str

    def __post_init__(self):
        if self.kind not in TOKEN_KINDS:
            raise ValueError(f"unknown token kind {self.kind!r}")

    def render(self) -> str:
        if self.kind == "chem_atom" or self.kind == "chem_bond":
            return f"<{self.text}>"
        if self.kind == "text":
            return _escape(self.text)
        return self.text


INDEX_OPEN = Token("index_open", "<i>")
INDEX_CLOSE = Token("index_close", "</i>")
TABLE_OPEN = Token("table", "<t>")
GROUP = Token("table", "<g>")
LABEL = Token("table", "<l>")
SUBST = Token("table", "<s>")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;")


def _unescape(text: str) -> str:
    return text.replace("&lt;", "<").replace("&amp;", "&")


@dataclass(frozen=True)
class TokenSequence:
    backbone: tuple[Token, ...] = ()
    table: tuple[Token, ...] = ()

    def to_text(self) -> str:
        return "".join(t.render() for t in self.backbone) + "".join(t.render() for t in self.table)

    def __str__(self) -> str:
        return self.to_text()

    @classmethod
    def from_text(cls, text: str) -> TokenSequence:
        """Tokenize a serialized sequence. Never raises; junk becomes text tokens."""
        split = text.find("<t>")
        head, tail = (text, "") if split == -1 else (text[:split], text[split:])
        bar = head.find("|")
        smiles_part, ext_part = (head, "") if bar == -1 else (head[:bar], head[bar:])
        return cls(tuple(_tokenize_backbone(smiles_part)) + tuple(_tokenize_extension(ext_part)),
                   tuple(_tokenize_table(tail)))


_BACKBONE_RE = re.compile(r"<i>|</i>|<[^<>]*>|%\d\d|\d|[().]|.", re.S | re.ASCII)
_EXT_RE = re.compile(r"[|:.,]|\d|[^|:.,\d]+", re.ASCII)
_TABLE_RE = re.compile(r"<[tgls]>|[^<]+|<")
_BOND_TEXT = {"-", "=", "#", ":"}
_EXT_KEYWORDS = {"m", "Sg", "n"} | set(CONNECTIVITIES)


def _tokenize_backbone(text: str) -> Iterator[Token]:
    in_index = False
    for m in _BACKBONE_RE.finditer(text):
        s = m.group()
        if s == "<i>":
            in_index = True
            yield INDEX_OPEN
        elif s == "</i>":
            in_index = False
            yield INDEX_CLOSE
        elif s.startswith("<") and s.endswith(">") and len(s) > 2:
            inner = s[1:-1]
            yield Token("chem_bond" if inner in _BOND_TEXT else "chem_atom", inner)
        elif s.isascii() and s.isdigit() and in_index:
            yield Token("digit", s)
        elif (s.isascii() and s.isdigit()) or s.startswith("%") or s in "().":
            yield Token("structural", s)
        else:
            yield Token("text", s)


def _tokenize_extension(text: str) -> Iterator[Token]:
    for m in _EXT_RE.finditer(text):
        s = m.group()
        if s.isascii() and s.isdigit():
            yield Token("digit", s)
        elif s in "|:.," or s in _EXT_KEYWORDS:
            yield Token("structural", s)
        else:
            yield Token("text", s)


def _tokenize_table(text: str) -> Iterator[Token]:
    for m in _TABLE_RE.finditer(text):
        s = m.group()
        if len(s) == 3 and s[0] == "<" and s[2] == ">":
            yield Token("table", s)
        else:
            yield Token("text", _unescape(s))


# --------------------------------------------------------------------------
# substituent tables

class SubstituentTable(Mapping):
    """Ordered, immutable mapping label -> tuple of substituent strings."""

    def __init__(self, entries=None):
        data: dict[str, tuple[str, ...]] = {}
        items = entries.items() if isinstance(entries, Mapping) else (entries or ())
        for label, subs in items:
            label = str(label)
            if not label:
                raise ValueError("empty table label")
            if label in data:
                raise ValueError(f"duplicate table label {label!r}")
            subs = tuple(str(s) for s in subs)
            if not subs:
                raise ValueError(f"label {label!r} has no substituents")
            data[label] = subs
        self._data = data

    def __getitem__(self, key: str) -> tuple[str, ...]:
        return self._data[key]

    def __iter__(self):
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._data) == {k: tuple(v) for k, v in other.items()}
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._data.items()))

    def __repr__(self):
        return f"SubstituentTable({self._data!r})"

    def to_dict(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._data.items()}

    def same_content(self, other: Mapping) -> bool:
        """Equal up to the order of each substituent list."""
        if set(self) != set(other):
            return False
        return all(Counter(self[k]) == Counter(other[k]) for k in self)


@dataclass(frozen=True)
class TableGroup:
    labels: tuple[str, ...]
    substituents: tuple[str, ...]


@dataclass(frozen=True)
class GroupedTable:
    groups: tuple[TableGroup, ...] = ()


_INT_RE = re.compile(r"^(0|[1-9][0-9]*)$")


def _is_int(s: str) -> bool:
    # ASCII only: str.isdigit accepts superscripts such as "²"
    return _INT_RE.match(s) is not None


def _compress_integers(values: Sequence[str]) -> list[str]:
    nums = sorted(int(v) for v in values)
    out: list[str] = []
    i = 0
    while i < len(nums):
        j = i
        while j + 1 < len(nums) and nums[j + 1] == nums[j] + 1:
            j += 1
        if j - i + 1 >= RANGE_THRESHOLD:
            out.append(f"{nums[i]}-{nums[j]}")
        else:
            out.extend(str(x) for x in nums[i:j + 1])
        i = j + 1
    return out


_RANGE_RE = re.compile(r"^(\d+)-(\d+)$", re.ASCII)


def _expand_integers(values: Sequence[str]) -> list[str] | None:
    """Expand compressed ranges, or ``None`` if ``values`` are not integer items."""
    out: list[str] = []
    has_range = False
    for v in values:
        if _is_int(v):
            out.append(v)
            continue
        m = _RANGE_RE.match(v)
        if m is None or not (_is_int(m.group(1)) and _is_int(m.group(2))):
            return None
        a, b = int(m.group(1)), int(m.group(2))
        if b - a + 1 < RANGE_THRESHOLD:
            return None
        has_range = True
        out.extend(str(x) for x in range(a, b + 1))
    return out if has_range else None


def compress_table(table: Mapping) -> GroupedTable:
    """Group labels sharing a substituent multiset; compress integer runs."""
    groups: dict[tuple[str, ...], list] = {}
    for label, subs in table.items():
        key = tuple(sorted(subs))
        if key in groups:
            groups[key][0].append(label)
        else:
            groups[key] = [[label], list(subs)]
    out = []
    for labels, subs in groups.values():
        if subs and all(_is_int(s) for s in subs):
            subs = _compress_integers(subs)
        out.append(TableGroup(tuple(labels), tuple(subs)))
    return GroupedTable(tuple(out))


def expand_table(grouped: GroupedTable) -> SubstituentTable:
    entries: dict[str, tuple[str, ...]] = {}
    for group in grouped.groups:
        subs = _expand_integers(group.substituents)
        subs = tuple(subs) if subs is not None else tuple(group.substituents)
        for label in group.labels:
            if label in entries:
                raise OverlappingLabelSets(f"label {label!r} appears in two groups")
            entries[label] = subs
    return SubstituentTable(entries)


def table_tokens(table: Mapping) -> tuple[Token, ...]:
    if not table:
        return ()
    out = [TABLE_OPEN]
    for group in compress_table(table).groups:
        out.append(GROUP)
        for label in group.labels:
            out += [LABEL, Token("text", label)]
        for sub in group.substituents:
            out += [SUBST, Token("text", sub)]
    return tuple(out)


# --------------------------------------------------------------------------
# encoding

def _index_tokens(i: int) -> list[Token]:
    return [INDEX_OPEN, *(Token("digit", d) for d in str(i)), INDEX_CLOSE]


def _check_label(label: str) -> None:
    if not label or _FORBIDDEN_LABEL_CHARS & set(label):
        raise ValueError(f"label {label!r} cannot be encoded")


def _ext_tokens(field: str) -> list[Token]:
    return list(_tokenize_extension(field))


def encode_optimized(ms: MarkushStructure, table: Mapping | None = None) -> TokenSequence:
    """Encode a structure and its substituent table as a token sequence.

    Atoms are renumbered to writing order first, so indices are always
    ``0..n-1``. Table labels that the structure does not use trigger a
    :class:`LabelNotInStructure` warning.
    """
    table = SubstituentTable(table or {})
    ms = in_writing_order(ms)
    lexemes, _ = smiles_lexemes(ms.graph)
    backbone: list[Token] = []
    for lexeme, atom_index in lexemes:
        if atom_index is not None:
            atom = ms.graph.atoms[atom_index]
            if atom.variable_label is not None:
                _check_label(atom.variable_label)
                backbone.append(Token("chem_atom", WILDCARD + atom.variable_label))
            else:
                backbone.append(Token("chem_atom", lexeme))
            backbone += _index_tokens(atom_index)
        elif lexeme in _BOND_TEXT:
            backbone.append(Token("chem_bond", lexeme))
        else:
            backbone.append(Token("structural", lexeme))

    fields = []
    for pv in sorted(ms.position_variations, key=lambda p: (p.endpoint_atom, p.candidate_atoms)):
        fields.append(f"m:{pv.endpoint_atom}:" + ".".join(map(str, pv.candidate_atoms)))
    for fv in sorted(ms.frequency_variations, key=lambda f: (f.atoms[0], f.atoms, f.label, f.connectivity)):
        if fv.label:
            _check_label(fv.label)
        fields.append(f"Sg:n:{','.join(map(str, fv.atoms))}:{fv.label}:{fv.connectivity}")
    if fields:
        backbone += _ext_tokens("|" + ",".join(fields))

    used = set(ms.labels) | set(ms.frequency_labels)
    for label in table:
        if label not in used:
            warnings.warn(f"table label {label!r} not used in the structure", LabelNotInStructure,
                          stacklevel=2)
    return TokenSequence(tuple(backbone), table_tokens(table))


def encode_optimized_text(ms: MarkushStructure, table: Mapping | None = None) -> str:
    return encode_optimized(ms, table).to_text()


# --------------------------------------------------------------------------
# decoding

@dataclass(frozen=True)
class Diagnostic:
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


class DecodeResult(NamedTuple):
    structure: MarkushStructure
    table: SubstituentTable
    diagnostics: list[Diagnostic]


def _decode_backbone(tokens: Sequence[Token], diags: list[Diagnostic]):
    builder = _Builder(strict=False)
    labels: dict[int, str] = {}
    written: list[int | None] = []
    k = 0
    n_tok = len(tokens)
    while k < n_tok:
        tok = tokens[k]
        k += 1
        if tok.kind == "chem_atom":
            text = tok.text
            if text.startswith(WILDCARD) and len(text) > 1:
                label = text[1:]
                idx = builder.add_atom(Atom(WILDCARD))
                labels[idx] = label
            else:
                try:
                    atom = parse_atom(text)
                except SmilesError:
                    diags.append(Diagnostic("UnknownToken", f"unknown atom token <{text}>"))
                    continue
                idx = builder.add_atom(atom)
            # index annotation
            if k < n_tok and tokens[k].kind == "index_open":
                k += 1
                digits = []
                while k < n_tok and tokens[k].kind == "digit":
                    digits.append(tokens[k].text)
                    k += 1
                if k < n_tok and tokens[k].kind == "index_close":
                    k += 1
                    written.append(int("".join(digits)) if digits else None)
                    if not digits:
                        diags.append(Diagnostic("BadIndex", f"empty index on atom {idx}"))
                else:
                    diags.append(Diagnostic("TruncatedSection", f"unterminated index on atom {idx}"))
                    written.append(int("".join(digits)) if digits else None)
            else:
                diags.append(Diagnostic("BadIndex", f"atom {idx} has no index"))
                written.append(None)
        elif tok.kind == "chem_bond":
            builder.feed(tok.text)
        elif tok.kind == "structural" and (tok.text in "()." or (tok.text.isascii() and tok.text.isdigit()) or tok.text.startswith("%")):
            builder.feed(tok.text)
        else:
            diags.append(Diagnostic("UnknownToken", f"unexpected token {tok.text!r} in backbone"))
    graph = builder.finish()
    for cls, msg in builder.problems:
        kind = "TruncatedSection" if cls.__name__.startswith("Unbalanced") else "UnknownToken"
        diags.append(Diagnostic(kind, msg))
    return graph, labels, written


def _index_map(written: list[int | None], diags: list[Diagnostic]) -> dict[int, int]:
    """Map written indices to dense atom positions (first occurrence wins)."""
    mapping: dict[int, int] = {}
    for pos, w in enumerate(written):
        if w is None:
            continue
        if w in mapping:
            diags.append(Diagnostic("DuplicateIndex", f"index {w} used by atoms {mapping[w]} and {pos}"))
            continue
        mapping[w] = pos
    if any(w is not None and w != pos for pos, w in enumerate(written)):
        diags.append(Diagnostic("BadIndex", f"indices {written} are not 0..{len(written) - 1}; "
                                                "atoms renumbered densely"))
    return mapping


def _split_fields(tokens: Sequence[Token]) -> list[list[Token]]:
    fields: list[list[Token]] = []
    current: list[Token] = []
    for tok in tokens:
        if tok.text == "|" and tok.kind == "structural":
            continue
        if tok.text == "," and tok.kind == "structural":
            # commas inside an Sg atom list belong to that section
            if current and current[0].text == "Sg" and sum(t.text == ":" for t in current) == 2:
                current.append(tok)
                continue
            fields.append(current)
            current = []
            continue
        current.append(tok)
    if current:
        fields.append(current)
    return fields


def _read_int(tokens: Sequence[Token], k: int) -> tuple[int | None, int]:
    digits = []
    while k < len(tokens) and tokens[k].kind == "digit":
        digits.append(tokens[k].text)
        k += 1
    return (int("".join(digits)) if digits else None), k


def _decode_field(field: list[Token], mapping: dict[int, int]):
    """Decode one section; returns a feature or raises ValueError(kind, msg)."""
    text = "".join(t.text for t in field)
    if not field:
        raise ValueError("TruncatedSection", "empty extension section")

    def atom(w):
        if w not in mapping:
            raise ValueError("BadIndex", f"section {text!r} references unknown index {w}")
        return mapping[w]

    head = field[0].text
    if head == "m":
        if len(field) < 4 or field[1].text != ":":
            raise ValueError("TruncatedSection", f"malformed m section {text!r}")
        endpoint, k = _read_int(field, 2)
        if endpoint is None or k >= len(field) or field[k].text != ":":
            raise ValueError("TruncatedSection", f"malformed m section {text!r}")
        cands = []
        k += 1
        while True:
            value, k = _read_int(field, k)
            if value is None:
                raise ValueError("TruncatedSection", f"malformed m section {text!r}")
            cands.append(atom(value))
            if k == len(field):
                break
            if field[k].text != ".":
                raise ValueError("TruncatedSection", f"malformed m section {text!r}")
            k += 1
        try:
            return PositionVariation(atom(endpoint), tuple(cands))
        except ValueError as exc:
            raise ValueError("BadIndex", f"invalid m section {text!r}: {exc}") from None
    if head == "Sg":
        m = re.fullmatch(r"Sg:n:(\d+(?:,\d+)*):([^:,|]*):(ht|hh|eu)", text)
        if m is None:
            raise ValueError("TruncatedSection", f"malformed Sg section {text!r}")
        atoms = tuple(atom(int(x)) for x in m.group(1).split(","))
        try:
            return FrequencyVariation(atoms, m.group(2), m.group(3))
        except ValueError as exc:
            raise ValueError("BadIndex", f"invalid Sg section {text!r}: {exc}") from None
    raise ValueError("UnknownToken", f"unknown extension section {text!r}")


def _decode_table(tokens: Sequence[Token], diags: list[Diagnostic]) -> SubstituentTable:
    if not tokens:
        return SubstituentTable()
    k = 0
    if tokens[0].text != "<t>" or tokens[0].kind != "table":
        diags.append(Diagnostic("TableSyntax", "table part does not start with <t>"))
    else:
        k = 1
    groups: list[tuple[list[str], list[str]]] = []
    while k < len(tokens):
        tok = tokens[k]
        if tok.kind == "table" and tok.text == "<g>":
            groups.append(([], []))
        elif tok.kind == "table" and tok.text in ("<l>", "<s>"):
            if not groups:
                diags.append(Diagnostic("TableSyntax", f"{tok.text} outside a group"))
                groups.append(([], []))
            value = ""
            if k + 1 < len(tokens) and tokens[k + 1].kind == "text":
                value = tokens[k + 1].text
                k += 1
            target = groups[-1][0] if tok.text == "<l>" else groups[-1][1]
            target.append(value)
        else:
            diags.append(Diagnostic("TableSyntax", f"unexpected table token {tok.text!r}"))
        k += 1

    entries: dict[str, tuple[str, ...]] = {}
    for labels, subs in groups:
        if not labels or not subs or any(not x for x in labels):
            diags.append(Diagnostic("TableSyntax", f"incomplete group labels={labels} substituents={subs}"))
            continue
        expanded = _expand_integers(subs)
        values = tuple(expanded) if expanded is not None else tuple(subs)
        for label in labels:
            if label in entries:
                diags.append(Diagnostic("TableSyntax", f"label {label!r} defined twice"))
                continue
            entries[label] = values
    return SubstituentTable(entries)


def decode_optimized(ts: TokenSequence | str) -> DecodeResult:
    """Rebuild structure and table. Total: bad input yields diagnostics."""
    if isinstance(ts, str):
        ts = TokenSequence.from_text(ts)
    diags: list[Diagnostic] = []
    if not ts.backbone and not ts.table:
        diags.append(Diagnostic("TruncatedSection", "empty sequence"))
        return DecodeResult(MarkushStructure(MolecularGraph()), SubstituentTable(), diags)

    bar = next((k for k, t in enumerate(ts.backbone) if t.kind == "structural" and t.text == "|"),
               len(ts.backbone))
    graph, labels, written = _decode_backbone(ts.backbone[:bar], diags)
    mapping = _index_map(written, diags)

    pvs, fvs = [], []
    for field in _split_fields(ts.backbone[bar:]):
        try:
            feature = _decode_field(field, mapping)
        except ValueError as exc:
            kind, msg = exc.args if len(exc.args) == 2 else ("UnknownToken", str(exc))
            diags.append(Diagnostic(kind, msg))
            continue
        (pvs if isinstance(feature, PositionVariation) else fvs).append(feature)

    ms = MarkushStructure.build(graph, labels, pvs, fvs)
    table = _decode_table(ts.table, diags)
    return DecodeResult(ms, table, diags)
