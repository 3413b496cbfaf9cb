"""Multiple-reflection expansion of Green functions on Kirchhoff quantum graphs."""
from .errors import (
    FormulationError,
    GraphValidationError,
    MREError,
    NearResonanceError,
    QuadratureBudgetError,
    SingularEvaluationError,
    UnsupportedOperationError,
)
from .graph import EdgePoint, QuantumGraph, build_graph, load_graph
from .mre import Formulation, neumann_sum, solve_star
from .terms import EVEN, LOG, ODD, Coef, TermSum, convolve

__all__ = [
    "FormulationError",
    "GraphValidationError",
    "MREError",
    "NearResonanceError",
    "QuadratureBudgetError",
    "SingularEvaluationError",
    "UnsupportedOperationError",
    "EdgePoint",
    "QuantumGraph",
    "build_graph",
    "load_graph",
    "Formulation",
    "neumann_sum",
    "solve_star",
    "EVEN",
    "LOG",
    "ODD",
    "Coef",
    "TermSum",
    "convolve",
]

__version__ = "0.1.0"
