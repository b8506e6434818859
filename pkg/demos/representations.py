"""Walk one Markush structure through every representation the package knows.

Run: python3 demos/representations.py
"""

from __future__ import annotations

from markushkit.chemgraph import canonical_smiles, valence_errors
from markushkit.cxsmiles import canonical_cxsmiles, parse_cxsmiles, strip_markush
from markushkit.markushrepr import compress_table, decode_optimized, encode_optimized_text

# a para-substituted benzene: R1 on the ring, R2 wandering over the ring,
# and a repeated CH2 unit
TEXT = "*c1ccc(CCO)cc1.* |$R1;;;;;;;;;;R2$,m:10:2.3.8.9,Sg:n:6:n:ht|"
TABLE = {"R1": ["methyl", "ethyl", "chloro"], "R2": ["methyl", "ethyl", "chloro"],
         "n": ["1", "2", "3", "4"]}


def main() -> None:
    ms = parse_cxsmiles(TEXT)
    print("input        ", TEXT)
    print("atoms        ", len(ms.graph), "| labels", ms.labels)
    print("valence ok   ", valence_errors(ms.graph) == [])
    print("canonical    ", canonical_cxsmiles(ms))
    print("stripped     ", canonical_smiles(strip_markush(ms)))

    # R1 and R2 share one list, n is a run: both get compressed
    print("table groups ", compress_table(TABLE))
    text = encode_optimized_text(ms, TABLE)
    print("optimized    ", text)

    back = decode_optimized(text)
    print("decoded      ", canonical_cxsmiles(back.structure), dict(back.table))
    print("round trip   ", canonical_cxsmiles(back.structure) == canonical_cxsmiles(ms))

    # a damaged string still decodes, with diagnostics instead of an exception
    broken = decode_optimized(text[:40])
    print("truncated    ", [d.kind for d in broken.diagnostics])


if __name__ == "__main__":
    main()
