"""Exact arithmetic substrate: polynomials, term orders, reduction, linear algebra."""
from fractions import Fraction as Rational

from .groebner import DivisorIndex, buchberger_check, failing_pairs, reduce, s_polynomial
from .hilbert import dimension_degree, hilbert_numerator
from .linalg import determinant, exact_rank, nullspace, primitive, rref, solve
from .polynomial import (
    DEFAULT_ORDER,
    Monomial,
    P,
    Polynomial,
    TermOrder,
    compare,
    lam_var,
    monomial,
    p_var,
    parse_polynomial,
    q_var,
    var,
    var_name,
)

__all__ = [
    "Rational", "Polynomial", "Monomial", "TermOrder", "DEFAULT_ORDER", "compare",
    "reduce", "s_polynomial", "buchberger_check", "failing_pairs", "DivisorIndex",
    "exact_rank", "determinant", "rref", "nullspace", "solve", "primitive",
    "hilbert_numerator", "dimension_degree", "P", "var", "p_var", "q_var", "lam_var",
    "monomial", "parse_polynomial", "var_name",
]
