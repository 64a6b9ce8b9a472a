"""Collective rationalizability of binary stochastic choice.

Decides whether pairwise choice frequencies are rationalizable by simple
scalability, moderate utility, or weak utility, for a single agent or for a
heterogeneous population, and runs uniformly valid statistical tests plus
Monte Carlo and volume harnesses around those decisions.
"""

from .core import (
    ChoiceVector,
    DeterministicChoiceVector,
    LinearOrder,
    OptionSet,
    PairIndexer,
    deterministic_vector,
    enumerate_orders,
    pair_index,
    pair_of,
)
from .errors import (
    ArgumentError,
    CollratError,
    DataError,
    ResourceLimitError,
    SolverError,
)

__version__ = "0.1.0"

__all__ = [
    "ChoiceVector",
    "DeterministicChoiceVector",
    "LinearOrder",
    "OptionSet",
    "PairIndexer",
    "deterministic_vector",
    "enumerate_orders",
    "pair_index",
    "pair_of",
    "ArgumentError",
    "CollratError",
    "DataError",
    "ResourceLimitError",
    "SolverError",
    "__version__",
]
