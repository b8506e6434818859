"""
Evaluation metrics for Markush structure recognition.

Structure metrics compare backbones with Markush features removed
(canonical SMILES equality stands in for InChIKey equality) and compare
the features themselves through the canonical Markush form. Table metrics
work on whitespace-normalized substituent strings.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .chemgraph import canonical_ranks, canonical_smiles, path_fingerprint, ranks_to_order, smiles_lexemes, tanimoto
from .cxsmiles import (
    MarkushStructure,
    canonicalize_markush,
    parse_cxsmiles,
    strip_markush,
)
from .markushrepr import SubstituentTable, decode_optimized

_WS = re.compile(r"\s+")


def normalize_substituent(text: str) -> str:
    return _WS.sub(" ", text.strip())


def normalize_table(table: Mapping) -> dict[str, list[str]]:
    return {normalize_substituent(str(k)): [normalize_substituent(s) for s in v] for k, v in table.items()}


# --------------------------------------------------------------------------
# structure metrics

def backbone_match(pred: MarkushStructure, gt: MarkushStructure) -> bool:
    return canonical_smiles(strip_markush(pred)) == canonical_smiles(strip_markush(gt))


def cxsmiles_exact_match(pred: MarkushStructure, gt: MarkushStructure) -> bool:
    if not backbone_match(pred, gt):
        return False
    return canonicalize_markush(pred) == canonicalize_markush(gt)


def tanimoto_score(pred: MarkushStructure, gt: MarkushStructure) -> float:
    a = path_fingerprint(strip_markush(pred))
    b = path_fingerprint(strip_markush(gt))
    return 100.0 * tanimoto(a, b)


# --------------------------------------------------------------------------
# table metrics

def table_exact_match(pred: Mapping, gt: Mapping) -> bool:
    p, g = normalize_table(pred), normalize_table(gt)
    if set(p) != set(g):
        return False
    return all(Counter(p[k]) == Counter(g[k]) for k in g)


def table_f1(pred: Mapping, gt: Mapping) -> tuple[float, float, float]:
    """Per-label precision/recall averaged over labels, then F1 (percent)."""
    p, g = normalize_table(pred), normalize_table(gt)
    if not p and not g:
        return 100.0, 100.0, 100.0
    if not p or not g:
        return 0.0, 0.0, 0.0

    def hits(label):
        if label not in p or label not in g:
            return 0
        return sum((Counter(p[label]) & Counter(g[label])).values())

    recall = sum(hits(lab) / len(g[lab]) for lab in g) / len(g)
    precision = sum(hits(lab) / len(p[lab]) for lab in p) / len(p)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return 100.0 * precision, 100.0 * recall, 100.0 * f1


def markush_exact_match(pred_ms: MarkushStructure, pred_table: Mapping,
                        gt_ms: MarkushStructure, gt_table: Mapping) -> bool:
    return cxsmiles_exact_match(pred_ms, gt_ms) and table_exact_match(pred_table, gt_table)


# --------------------------------------------------------------------------
# per-feature scores

@dataclass
class FeatureCounts:
    r_correct: int = 0
    r_total: int = 0
    m_correct: int = 0
    m_total: int = 0
    sg_correct: int = 0
    sg_total: int = 0

    def fractions(self) -> tuple[float, float, float]:
        def frac(c, t):
            return 1.0 if t == 0 else c / t
        return (frac(self.r_correct, self.r_total), frac(self.m_correct, self.m_total),
                frac(self.sg_correct, self.sg_total))


def _unlabelled_order(ms: MarkushStructure) -> tuple[str, list[int]]:
    """Canonical SMILES of the label-free graph and its atom output order."""
    graph = ms.graph.with_atoms([replace(a, variable_label=None) for a in ms.graph.atoms])
    lexemes, emitted = smiles_lexemes(graph, ranks_to_order(canonical_ranks(graph)))
    return "".join(lex for lex, _ in lexemes), emitted


def _greedy_count(gt_keys: Sequence, pred_keys: Sequence, score) -> int:
    """Greedy injective matching in ground-truth order; counts exact hits."""
    free = list(range(len(pred_keys)))
    correct = 0
    for g in gt_keys:
        if not free:
            break
        best = max(free, key=lambda j: (score(g, pred_keys[j]), -j))
        if score(g, pred_keys[best])[0] <= 0:
            continue
        free.remove(best)
        if score(g, pred_keys[best]) == (1, 1.0):
            correct += 1
    return correct


def feature_counts(pred: MarkushStructure, gt: MarkushStructure) -> FeatureCounts:
    counts = FeatureCounts(
        r_total=len(gt.variable_groups),
        m_total=len(gt.position_variations),
        sg_total=len(gt.frequency_variations),
    )
    if cxsmiles_exact_match(pred, gt):
        counts.r_correct, counts.m_correct, counts.sg_correct = counts.r_total, counts.m_total, counts.sg_total
        return counts

    pred_key, pred_order = _unlabelled_order(pred)
    gt_key, gt_order = _unlabelled_order(gt)
    if pred_key == gt_key:
        # the graphs align atom for atom through their canonical orders
        to_pred = {g: p for g, p in zip(gt_order, pred_order)}
        pred_labels = {vg.atom_index: vg.label for vg in pred.variable_groups}
        counts.r_correct = sum(pred_labels.get(to_pred[vg.atom_index]) == vg.label
                               for vg in gt.variable_groups)
        pred_m = Counter((pv.endpoint_atom, pv.candidate_atoms) for pv in pred.position_variations)
        for pv in gt.position_variations:
            key = (to_pred[pv.endpoint_atom], tuple(sorted(to_pred[c] for c in pv.candidate_atoms)))
            if pred_m[key] > 0:
                pred_m[key] -= 1
                counts.m_correct += 1
        pred_sg = Counter((fv.atoms, fv.label, fv.connectivity) for fv in pred.frequency_variations)
        for fv in gt.frequency_variations:
            key = (tuple(sorted(to_pred[a] for a in fv.atoms)), fv.label, fv.connectivity)
            if pred_sg[key] > 0:
                pred_sg[key] -= 1
                counts.sg_correct += 1
        return counts

    # backbones differ: greedy matching on label, then candidate-set overlap
    counts.r_correct = sum((Counter(gt.labels) & Counter(pred.labels)).values())
    cgt, cpred = canonicalize_markush(gt), canonicalize_markush(pred)

    def env(ms, i):
        atom = ms.graph.atoms[i]
        return atom.variable_label or atom.element

    def m_key(ms, pv):
        partner = [env(ms, j) for j, _ in ms.graph.neighbors(pv.endpoint_atom)]
        return (env(ms, pv.endpoint_atom), tuple(sorted(partner))), frozenset(pv.candidate_atoms)

    def jaccard(a, b):
        return len(a & b) / len(a | b) if a | b else 1.0

    def m_score(g, p):
        return (int(g[0] == p[0]), jaccard(g[1], p[1]))

    counts.m_correct = _greedy_count([m_key(cgt, pv) for pv in cgt.position_variations],
                                     [m_key(cpred, pv) for pv in cpred.position_variations], m_score)

    def sg_key(fv):
        return (fv.label, fv.connectivity), frozenset(fv.atoms)

    counts.sg_correct = _greedy_count([sg_key(fv) for fv in cgt.frequency_variations],
                                      [sg_key(fv) for fv in cpred.frequency_variations], m_score)
    return counts


def feature_scores(pred: MarkushStructure, gt: MarkushStructure) -> tuple[float, float, float]:
    """Fractions of ground-truth R-groups, ``m`` and ``Sg`` sections recovered."""
    return feature_counts(pred, gt).fractions()


# --------------------------------------------------------------------------
# dataset evaluation

@dataclass
class SampleResult:
    id: str
    cxsmiles_em: bool
    tanimoto: float
    table_em: bool
    table_precision: float
    table_recall: float
    table_f1: float
    markush_em: bool
    features: FeatureCounts
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SampleResult:
        d = dict(d)
        d["features"] = FeatureCounts(**d["features"])
        return cls(**d)


@dataclass
class EvalReport:
    n_samples: int
    cxsmiles_em: float
    tanimoto_mean: float
    table_em: float
    table_f1: float
    markush_em: float
    feature_r: float
    feature_m: float
    feature_sg: float
    per_sample: list[SampleResult] = field(default_factory=list)

    def headline(self) -> dict[str, float]:
        d = asdict(self)
        del d["per_sample"]
        return d

    def to_dict(self) -> dict[str, Any]:
        d = self.headline()
        d["per_sample"] = [s.to_dict() for s in self.per_sample]
        return d

    def summary(self) -> str:
        """Human-readable table with integer percentages."""
        rows = [
            ("CXSMILES", f"EM {round(self.cxsmiles_em):d}", f"T {round(self.tanimoto_mean):d}"),
            ("Table", f"EM {round(self.table_em):d}", f"F1 {round(self.table_f1):d}"),
            ("Markush", f"EM {round(self.markush_em):d}", ""),
            ("Features", f"R {round(self.feature_r):d}",
             f"m {round(self.feature_m):d}  Sg {round(self.feature_sg):d}"),
        ]
        lines = [f"samples: {self.n_samples}"]
        lines += [f"{a:<10}{b:<10}{c}".rstrip() for a, b, c in rows]
        return "\n".join(lines)


def aggregate(results: Sequence[SampleResult]) -> EvalReport:
    """Reduce per-sample results into a report (order independent)."""
    n = len(results)

    def pct(flags):
        return 100.0 * sum(flags) / n if n else 0.0

    def mean(xs):
        return sum(xs) / n if n else 0.0

    totals = FeatureCounts()
    for r in results:
        for name in ("r_correct", "r_total", "m_correct", "m_total", "sg_correct", "sg_total"):
            setattr(totals, name, getattr(totals, name) + getattr(r.features, name))
    fr, fm, fsg = totals.fractions()
    return EvalReport(
        n_samples=n,
        cxsmiles_em=pct(r.cxsmiles_em for r in results),
        tanimoto_mean=mean([r.tanimoto for r in results]),
        table_em=pct(r.table_em for r in results),
        table_f1=mean([r.table_f1 for r in results]),
        markush_em=pct(r.markush_em for r in results),
        feature_r=100.0 * fr,
        feature_m=100.0 * fm,
        feature_sg=100.0 * fsg,
        per_sample=list(results),
    )


def read_structure(record: Mapping[str, Any]) -> tuple[MarkushStructure, SubstituentTable, list[str]]:
    """Structure and table of a dataset/prediction record.

    ``optimized`` wins when present; otherwise ``cxsmiles`` + ``table``.
    Raises ``ValueError`` when neither can be read.
    """
    optimized = record.get("optimized")
    if optimized is not None:
        result = decode_optimized(optimized)
        return result.structure, result.table, [str(d) for d in result.diagnostics]
    if "cxsmiles" not in record:
        raise ValueError("record has neither 'optimized' nor 'cxsmiles'")
    ms = parse_cxsmiles(record["cxsmiles"])
    return ms, SubstituentTable(record.get("table") or {}), []


def evaluate_sample(pred_ms: MarkushStructure, pred_table: Mapping, gt_ms: MarkushStructure,
                    gt_table: Mapping, sample_id: str = "", diagnostics: Iterable[str] = ()) -> SampleResult:
    cx = cxsmiles_exact_match(pred_ms, gt_ms)
    tem = table_exact_match(pred_table, gt_table)
    p, r, f = table_f1(pred_table, gt_table)
    return SampleResult(
        id=sample_id,
        cxsmiles_em=cx,
        tanimoto=tanimoto_score(pred_ms, gt_ms),
        table_em=tem,
        table_precision=p,
        table_recall=r,
        table_f1=f,
        markush_em=cx and tem,
        features=feature_counts(pred_ms, gt_ms),
        diagnostics=list(diagnostics),
    )


def _miss(gt_ms: MarkushStructure, sample_id: str, reason: str) -> SampleResult:
    return SampleResult(
        id=sample_id, cxsmiles_em=False, tanimoto=0.0, table_em=False,
        table_precision=0.0, table_recall=0.0, table_f1=0.0, markush_em=False,
        features=FeatureCounts(r_total=len(gt_ms.variable_groups), m_total=len(gt_ms.position_variations),
                               sg_total=len(gt_ms.frequency_variations)),
        diagnostics=[reason],
    )


def evaluate_pair(pred: Mapping[str, Any], gt: Mapping[str, Any]) -> SampleResult:
    """Score one prediction record against one ground-truth record.

    A ground truth that cannot be read raises; a prediction that cannot be
    read is a miss on every metric.
    """
    gt_ms, gt_table, _ = read_structure(gt)
    sample_id = str(gt.get("id", ""))
    try:
        pred_ms, pred_table, diags = read_structure(pred)
    except ValueError as exc:
        return _miss(gt_ms, sample_id, f"unreadable prediction: {exc}")
    return evaluate_sample(pred_ms, pred_table, gt_ms, gt_table, sample_id, diags)


def evaluate_dataset(pairs: Iterable[tuple[Mapping[str, Any], Mapping[str, Any]]]) -> EvalReport:
    return aggregate([evaluate_pair(pred, gt) for pred, gt in pairs])
