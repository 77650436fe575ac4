"""sparseobs: second-order sparse recovery and greedy Hessian-aware pruning."""

from . import exceptions, fileio, harness, linalg, objectives, pruner, solvers, sparsity
from .estimators import GreedyHessianPruner, SparseRecovery
from .objectives import LeastSquaresObjective
from .solvers import SolverConfig, SolverState, TraceRecord, run
from .sparsity import Mask, top_k

__all__ = [
    "exceptions",
    "fileio",
    "harness",
    "linalg",
    "objectives",
    "pruner",
    "solvers",
    "sparsity",
    "GreedyHessianPruner",
    "SparseRecovery",
    "LeastSquaresObjective",
    "SolverConfig",
    "SolverState",
    "TraceRecord",
    "run",
    "Mask",
    "top_k",
]

__version__ = "0.1.0"
