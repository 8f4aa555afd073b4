"""Assumption-based online monitoring of timed properties."""

from .automata import Tba, TbaError, load_tba, parse_tba, product
from .monitor import Monitor, QueryRejected, Verdict, specificity_leq
from .observations import ObservationElement, ObservationError, parse_line

__all__ = [
    "Monitor",
    "ObservationElement",
    "ObservationError",
    "QueryRejected",
    "Tba",
    "TbaError",
    "Verdict",
    "load_tba",
    "parse_line",
    "parse_tba",
    "product",
    "specificity_leq",
]
