"""Markush structure toolkit: graphs, CXSMILES, compact sequences, metrics, data generation."""

from .chemgraph import MolecularGraph, canonical_smiles, parse_smiles, write_smiles
from .cxsmiles import MarkushStructure, canonical_cxsmiles, parse_cxsmiles, write_cxsmiles
from .markushrepr import SubstituentTable, decode_optimized, encode_optimized, encode_optimized_text

__version__ = "0.1.0"

__all__ = [
    "MarkushStructure", "MolecularGraph", "SubstituentTable", "canonical_cxsmiles",
    "canonical_smiles", "decode_optimized", "encode_optimized", "encode_optimized_text",
    "parse_cxsmiles", "parse_smiles", "write_cxsmiles", "write_smiles",
]
