"""DGQL front end: parse, print, desugar, and check well-designedness."""

from .ast import FormalQuery, Query
from .desugar import check_well_designed, desugar, expand_rpq, well_designedness_violations
from .parser import parse, to_text


def compile_query(text: str) -> FormalQuery:
    """Parse, desugar and check a query; raises on any front-end error."""
    formal = desugar(parse(text))
    check_well_designed(formal)
    return formal


__all__ = [
    "FormalQuery", "Query", "check_well_designed", "compile_query", "desugar", "expand_rpq", "parse",
    "to_text", "well_designedness_violations",
]
