"""Dataset-level summary: feature proportions and mean sizes."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Mapping

from ..cxsmiles import MarkushStructure
from ..metrics import read_structure


@dataclass(frozen=True)
class DatasetStats:
    n: int
    rgroup: float | None
    m: float | None
    sg: float | None
    mean_atoms: float | None
    mean_variable_groups: float | None
    mean_substituents: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def format_table(self) -> str:
        def cell(v, pct=False):
            if v is None:
                return "-"
            return f"{v * 100:.0f}%" if pct else f"{v:.1f}"

        head = ["samples", "R-group", "m", "Sg", "atoms", "var. groups", "substituents"]
        row = [str(self.n), cell(self.rgroup, True), cell(self.m, True), cell(self.sg, True),
               cell(self.mean_atoms), cell(self.mean_variable_groups), cell(self.mean_substituents)]
        widths = [max(len(h), len(r)) for h, r in zip(head, row)]
        fmt = "  ".join("{:>%d}" % w for w in widths)
        return fmt.format(*head) + "\n" + fmt.format(*row)


def label_count(ms: MarkushStructure) -> int:
    """Distinct labels needing a definition: variable groups plus named repeat counts."""
    return len(set(ms.labels) | set(ms.frequency_labels))


def _pairs(items) -> Iterable[tuple[MarkushStructure, Mapping]]:
    for item in items:
        if isinstance(item, tuple):
            yield item
        elif isinstance(item, Mapping):
            ms, table, problems = read_structure(item)
            if problems:
                raise ValueError(f"record {item.get('id', '?')}: {'; '.join(problems)}")
            yield ms, table
        else:
            yield item.structure, item.table


def dataset_stats(samples) -> DatasetStats:
    """Summarize Samples, JSONL record dicts, or (structure, table) pairs."""
    n = 0
    r = m = sg = 0
    atoms = labels = subs = 0
    for ms, table in _pairs(samples):
        n += 1
        r += bool(ms.variable_groups)
        m += bool(ms.position_variations)
        sg += bool(ms.frequency_variations)
        atoms += len(ms.graph.atoms)
        labels += label_count(ms)
        subs += sum(len(v) for v in table.values())
    if n == 0:
        return DatasetStats(0, None, None, None, None, None, None)
    return DatasetStats(n, r / n, m / n, sg / n, atoms / n, labels / n, subs / n)
