"""Substituent lexicon and sentence templates, with their text-file loaders.

Lexicon file layout (tab-separated, ``#`` starts a comment line)::

    [substituents]          valence<TAB>name
    [abbreviations]         valence<TAB>name<TAB>SMILES
    [functional_groups]     SMILES (attached through its first atom)
    [atoms]                 valence<TAB>symbol<TAB>name
    [integers]              lo-hi

A template directory holds one plain-text file per template kind, one
template per line. Sentence templates may use the placeholders ``{labels}``,
``{substituents}`` and ``{integers}``; list templates are written as
``separator|final separator``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..chemgraph import SmilesError, parse_smiles, valence_errors

PLACEHOLDER_KINDS = ("labels", "substituents", "integers")
TEMPLATE_FILES = {
    "definition": "definition.txt",
    "definition_multi": "definition_multi.txt",
    "frequency": "frequency.txt",
    "lists": "lists.txt",
    "prefix": "prefix.txt",
    "suffix": "suffix.txt",
    "noise": "noise.txt",
}
_PLACEHOLDER_RE = re.compile(r"\{([^{}]*)\}")
_SECTION_RE = re.compile(r"^\[([a-z_]+)\]$")
_RANGE_RE = re.compile(r"^(\d+)\s*-\s*(\d+)$")


class LexiconError(ValueError):
    pass


class TemplateError(ValueError):
    pass


class MissingTemplateKind(TemplateError):
    """A structure needs a template kind the template set does not provide."""


@dataclass(frozen=True)
class Substituent:
    """One lexicon entry that can fill a site consuming ``valence`` bond orders."""

    text: str
    valence: int
    smiles: str | None = None
    kind: str = "name"


@dataclass(frozen=True)
class Lexicon:
    substituents: tuple[Substituent, ...]
    abbreviations: tuple[Substituent, ...]
    functional_groups: tuple[str, ...]
    atoms: tuple[tuple[int, str, str], ...]
    integer_ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.integer_ranges:
            raise LexiconError("lexicon needs at least one integer range")
        for lo, hi in self.integer_ranges:
            if lo > hi:
                raise LexiconError(f"empty integer range {lo}-{hi}")

    def for_valence(self, valence: int) -> list[Substituent]:
        """Every entry whose attachment valence equals ``valence``."""
        out = [s for s in self.substituents if s.valence == valence]
        out += [s for s in self.abbreviations if s.valence == valence]
        out += [Substituent(sym, v, sym, "atom") for v, sym, _ in self.atoms if v == valence]
        out += [Substituent(name, v, sym, "atom_name") for v, sym, name in self.atoms if v == valence]
        return out

    @property
    def valences(self) -> list[int]:
        return sorted({s.valence for s in self.substituents + self.abbreviations}
                      | {v for v, _, _ in self.atoms})


def _sections(text: str, source: str) -> dict[str, list[list[str]]]:
    out: dict[str, list[list[str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n").strip()
        if not line or line.startswith("#"):
            continue
        header = _SECTION_RE.match(line)
        if header:
            current = header.group(1)
            out.setdefault(current, [])
            continue
        if current is None:
            raise LexiconError(f"{source}:{lineno}: entry outside any section")
        out[current].append([c.strip() for c in line.split("\t")])
    return out


def _valence(cell: str, where: str) -> int:
    try:
        v = int(cell)
    except ValueError:
        raise LexiconError(f"{where}: valence {cell!r} is not an integer") from None
    if not 1 <= v <= 4:
        raise LexiconError(f"{where}: valence {v} outside 1..4")
    return v


def parse_lexicon(text: str, source: str = "<lexicon>") -> Lexicon:
    sections = _sections(text, source)
    known = {"substituents", "abbreviations", "functional_groups", "atoms", "integers"}
    extra = sorted(set(sections) - known)
    if extra:
        raise LexiconError(f"{source}: unknown sections {extra}")
    subs = []
    for row in sections.get("substituents", []):
        if len(row) != 2:
            raise LexiconError(f"{source}: substituent row needs 2 columns: {row}")
        subs.append(Substituent(row[1], _valence(row[0], source)))
    abbrs = []
    for row in sections.get("abbreviations", []):
        if len(row) != 3:
            raise LexiconError(f"{source}: abbreviation row needs 3 columns: {row}")
        try:
            parse_smiles(row[2])
        except SmilesError as exc:
            raise LexiconError(f"{source}: abbreviation {row[1]!r}: {exc}") from None
        abbrs.append(Substituent(row[1], _valence(row[0], source), row[2], "abbreviation"))
    groups = []
    for row in sections.get("functional_groups", []):
        try:
            g = parse_smiles(row[0])
        except SmilesError as exc:
            raise LexiconError(f"{source}: functional group {row[0]!r}: {exc}") from None
        if len(g.components()) != 1 or valence_errors(g):
            raise LexiconError(f"{source}: functional group {row[0]!r} is not a valid fragment")
        groups.append(row[0])
    atoms = []
    for row in sections.get("atoms", []):
        if len(row) != 3:
            raise LexiconError(f"{source}: atom row needs 3 columns: {row}")
        atoms.append((_valence(row[0], source), row[1], row[2]))
    ranges = []
    for row in sections.get("integers", []):
        m = _RANGE_RE.match(row[0])
        if not m:
            raise LexiconError(f"{source}: bad integer range {row[0]!r}")
        ranges.append((int(m.group(1)), int(m.group(2))))
    return Lexicon(tuple(subs), tuple(abbrs), tuple(groups), tuple(atoms), tuple(ranges))


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Read a lexicon file; the bundled one when ``path`` is None."""
    if path is None:
        text = resources.files("markushkit.datagen").joinpath("data/lexicon.txt").read_text("utf-8")
        return parse_lexicon(text, "lexicon.txt")
    return parse_lexicon(Path(path).read_text(encoding="utf-8"), str(path))


def template_placeholders(template: str) -> list[str]:
    return _PLACEHOLDER_RE.findall(template)


@dataclass(frozen=True)
class TemplateSet:
    definition: tuple[str, ...] = ()
    definition_multi: tuple[str, ...] = ()
    frequency: tuple[str, ...] = ()
    lists: tuple[tuple[str, str], ...] = ((", ", " or "),)
    prefix: tuple[str, ...] = ()
    suffix: tuple[str, ...] = ()
    noise: tuple[str, ...] = ()

    def __post_init__(self):
        for kind in ("definition", "definition_multi", "frequency", "prefix", "suffix", "noise"):
            for t in getattr(self, kind):
                for name in template_placeholders(t):
                    if name not in PLACEHOLDER_KINDS:
                        raise TemplateError(f"{kind} template {t!r} uses unknown placeholder {{{name}}}")
        required = {
            "definition": {"labels", "substituents"},
            "definition_multi": {"labels", "substituents"},
            "frequency": {"labels", "integers"},
        }
        for kind, need in required.items():
            for t in getattr(self, kind):
                if not need <= set(template_placeholders(t)):
                    raise TemplateError(f"{kind} template {t!r} must contain {sorted(need)}")
        for t in self.prefix + self.suffix:
            if template_placeholders(t):
                raise TemplateError(f"prefix/suffix template {t!r} must not use placeholders")
        for t in self.noise:
            names = set(template_placeholders(t))
            if names and names != {"labels", "substituents"}:
                raise TemplateError(f"noise template {t!r} must use both or neither placeholder")
        if not self.lists:
            raise TemplateError("at least one list template is required")

    @classmethod
    def from_directory(cls, path: str | Path) -> TemplateSet:
        path = Path(path)
        if not path.is_dir():
            raise TemplateError(f"template directory {path} does not exist")
        return cls.from_texts({kind: (path / name).read_text(encoding="utf-8")
                               for kind, name in TEMPLATE_FILES.items() if (path / name).exists()})

    @classmethod
    def from_texts(cls, texts: dict[str, str]) -> TemplateSet:
        kwargs = {}
        for kind, text in texts.items():
            if kind not in TEMPLATE_FILES:
                raise TemplateError(f"unknown template kind {kind!r}")
            lines = [ln for ln in text.split("\n") if ln.strip() and not ln.lstrip().startswith("#")]
            if kind == "lists":
                pairs = []
                for ln in lines:
                    if ln.count("|") != 1:
                        raise TemplateError(f"list template {ln!r} must be 'sep|final'")
                    sep, last = ln.split("|")
                    pairs.append((sep, last))
                kwargs[kind] = tuple(pairs)
            else:
                kwargs[kind] = tuple(ln.strip() for ln in lines)
        return cls(**kwargs)


def load_templates(path: str | Path | None = None) -> TemplateSet:
    """Read a template directory; the bundled one when ``path`` is None."""
    if path is None:
        root = resources.files("markushkit.datagen").joinpath("data/templates")
        return TemplateSet.from_texts({kind: root.joinpath(name).read_text("utf-8")
                                       for kind, name in TEMPLATE_FILES.items()
                                       if root.joinpath(name).is_file()})
    return TemplateSet.from_directory(path)


def load_corpus(path: str | Path | None = None) -> list[tuple[str, str]]:
    """Read ``SMILES [id]`` lines; the bundled corpus when ``path`` is None.

    Returns (id, SMILES) pairs. Lines without an id get ``line<N>``.
    """
    if path is None:
        text = resources.files("markushkit.datagen").joinpath("data/corpus.smi").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        out.append((parts[1].strip() if len(parts) > 1 else f"line{lineno}", parts[0]))
    return out
