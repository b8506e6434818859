"""Templated textual definitions of Markush labels and their substituent tables."""

from __future__ import annotations

import re
from typing import Sequence

import numpy as np

from ..cxsmiles import MarkushStructure
from ..markushrepr import SubstituentTable
from .augment import site_valence
from .config import GenConfig
from .lexicon import Lexicon, MissingTemplateKind, Substituent, TemplateSet, template_placeholders


class NoCompatibleSubstituent(ValueError):
    pass


_NAT_RE = re.compile(r"(\d+)")


def natural_key(label: str):
    return [int(p) if p.isdigit() else p for p in _NAT_RE.split(label)]


def _pick(rng: np.random.Generator, seq: Sequence):
    return seq[int(rng.integers(len(seq)))]


def render_list(items: Sequence[str], template: tuple[str, str]) -> str:
    sep, last = template
    if len(items) == 1:
        return items[0]
    return sep.join(items[:-1]) + last + items[-1]


def _fill(template: str, **values: str) -> str:
    out = template
    for name in template_placeholders(template):
        out = out.replace("{" + name + "}", values[name])
    return out


def label_valences(ms: MarkushStructure) -> dict[str, int]:
    """Bond orders consumed at each variable-group site."""
    return {vg.label: site_valence(ms.graph, vg.atom_index) for vg in ms.variable_groups}


def _realize(sub: Substituent, cfg: GenConfig, rng: np.random.Generator) -> str:
    if sub.kind == "abbreviation" and rng.random() < cfg.p_abbreviation_as_smiles:
        return sub.smiles
    return sub.text


def choose_substituents(valence: int, lex: Lexicon, cfg: GenConfig,
                        rng: np.random.Generator) -> list[str]:
    """1..max_substituents distinct texts whose attachment valence equals ``valence``."""
    pool = lex.for_valence(valence)
    if not pool:
        raise NoCompatibleSubstituent(f"lexicon has no substituent of valence {valence}")
    k = int(rng.integers(1, cfg.max_substituents + 1))
    out: list[str] = []
    for idx in rng.permutation(len(pool)):
        text = _realize(pool[int(idx)], cfg, rng)
        if text not in out:
            out.append(text)
        if len(out) == k:
            break
    return out


def _render_integers(values: list[int], lists: tuple[tuple[str, str], ...],
                     rng: np.random.Generator) -> str:
    if len(values) >= 2 and values == list(range(values[0], values[-1] + 1)):
        form = int(rng.integers(3))
        if form == 0:
            return f"{values[0]} to {values[-1]}"
        if form == 1:
            return f"{values[0]}-{values[-1]}"
    return render_list([str(v) for v in values], _pick(rng, lists))


def generate_description(ms: MarkushStructure, templates: TemplateSet, lex: Lexicon,
                         rng: np.random.Generator, cfg: GenConfig | None = None
                         ) -> tuple[str, SubstituentTable]:
    """Sentences defining every label of ``ms`` plus the table they realize."""
    cfg = cfg or GenConfig()
    valences = label_valences(ms)
    vg_labels = sorted(valences, key=natural_key)
    freq_labels = sorted(set(ms.frequency_labels), key=natural_key)
    if not vg_labels and not freq_labels:
        return "", SubstituentTable()
    if vg_labels and not templates.definition:
        raise MissingTemplateKind("structure has variable groups but no definition templates")
    if freq_labels and not templates.frequency:
        raise MissingTemplateKind("structure has repeat labels but no frequency templates")

    table: dict[str, list[str]] = {}
    sentences: list[str] = []

    pending = list(vg_labels)
    while pending:
        label = pending.pop(0)
        group = [label]
        if templates.definition_multi and rng.random() < cfg.p_shared_definition:
            mates = [x for x in pending if valences[x] == valences[label]]
            if mates:
                extra = mates[:int(rng.integers(1, min(2, len(mates)) + 1))]
                group += extra
                pending = [x for x in pending if x not in extra]
        subs = choose_substituents(valences[label], lex, cfg, rng)
        for lab in group:
            table[lab] = list(subs)
        tpl = _pick(rng, templates.definition if len(group) == 1 else templates.definition_multi)
        sentences.append(_fill(
            tpl,
            labels=render_list(group, (", ", " and ")),
            substituents=render_list(subs, _pick(rng, templates.lists)),
        ))

    for label in freq_labels:
        lo, hi = _pick(rng, lex.integer_ranges)
        values = list(range(lo, hi + 1))
        table[label] = [str(v) for v in values]
        sentences.append(_fill(_pick(rng, templates.frequency), labels=label,
                               integers=_render_integers(values, templates.lists, rng)))

    if templates.noise and rng.random() < cfg.p_noise_sentence:
        tpl = _pick(rng, templates.noise)
        if template_placeholders(tpl):
            free = [x for x in cfg.noise_labels if x not in table]
            if free:
                label = _pick(rng, free)
                subs = choose_substituents(1, lex, cfg, rng)
                table[label] = subs
                sentences.insert(int(rng.integers(len(sentences) + 1)), _fill(
                    tpl, labels=label, substituents=render_list(subs, _pick(rng, templates.lists))))
        else:
            sentences.insert(int(rng.integers(len(sentences) + 1)), tpl)

    if templates.prefix and rng.random() < cfg.p_prefix:
        sentences.insert(0, _pick(rng, templates.prefix))
    if templates.suffix and rng.random() < cfg.p_suffix:
        sentences.append(_pick(rng, templates.suffix))
    return " ".join(sentences), SubstituentTable(table)
