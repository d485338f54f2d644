"""Conditional correlation independence (CCI) testing and PC / PC-Stable search."""

from .citests import (
    CciTest,
    CiTest,
    FisherZTest,
    IndependenceDecision,
    RankPartialTest,
    cci,
    hermite_basis,
    independent_unconditional,
    make_test,
    power_basis,
)
from .dataset import Dataset, load_csv, write_csv
from .graph import Graph, apply_meek_rules, d_separated, pattern_from_dag, skeleton
from .pcsearch import OracleTest, SearchConfig, adjacency_search, oracle_test, pc

__version__ = "0.1.0"
