from artifact.search.oracle import OracleRefused, solve_oracle
from artifact.search.parallel import solve_parallel
from artifact.search.sequential import solve_sequential
from artifact.search.space import (
    InvalidProblemError,
    NodeBudgetExceeded,
    NoSolutionError,
    SearchNode,
    SearchSpace,
    SearchStats,
    expand,
    root_node,
)

__all__ = [
    "InvalidProblemError",
    "NodeBudgetExceeded",
    "NoSolutionError",
    "OracleRefused",
    "SearchNode",
    "SearchSpace",
    "SearchStats",
    "expand",
    "root_node",
    "solve_oracle",
    "solve_parallel",
    "solve_sequential",
]
