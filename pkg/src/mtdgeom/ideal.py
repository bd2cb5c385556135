"""Generators of the prime ideal of the model's Zariski closure, and their checks.

Three families, all in the state unknowns ``p_w``:

* ``linear1`` -- ``p_w - sum_j p_{m..w_j..m w_l} + (l-1) p_{m..m w_l}`` for every
  ``w`` with at least two of ``w_0..w_{l-1}`` different from ``m``;
* ``linear2`` -- ``sum_r p_{m..i..m r} - sum_r p_{m..m r}`` for each lag
  position and symbol ``i < m``;
* the 2x2 minors of the ``l x (m-1)^2`` matrix ``A = (A_2 ... A_m)`` whose
  block ``A_r`` holds ``p_{m..i..m r} - p_{m..m r}`` in row ``j``, column ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb

from .algebra.groebner import buchberger_check
from .algebra.hilbert import dimension_degree, hilbert_numerator
from .algebra.linalg import exact_rank
from .algebra.polynomial import (
    DEFAULT_ORDER,
    Monomial,
    P,
    Polynomial,
    TermOrder,
    mono_mul,
    p_var,
    sum_polys,
)
from .errors import FormulaMismatch
from .model import ModelShape, symbolic_parametrize

# largest shape (componentwise) whose Groebner check runs every S-pair
UNPRUNED_LIMIT = (3, 3)


def _lead(state: str) -> Monomial:
    return ((p_var(state), 1),)


@dataclass
class GeneratorSet:
    shape: ModelShape
    linear1: list
    linear2: list
    matrixA: list
    minors: list
    order: TermOrder = DEFAULT_ORDER
    # designated (underlined) leading monomials, aligned with each family
    lead1: list = field(default_factory=list)
    lead2: list = field(default_factory=list)
    leadA: list = field(default_factory=list)
    lead_minors: list = field(default_factory=list)

    @property
    def linear(self) -> list:
        return self.linear1 + self.linear2

    @property
    def generators(self) -> list:
        return self.linear1 + self.linear2 + self.minors

    @property
    def designated_leads(self) -> list:
        return self.lead1 + self.lead2 + self.lead_minors

    def matrix_variables(self) -> set:
        return {v for row in self.matrixA for e in row for v in e.variables()}

    def to_json(self) -> dict:
        fmt = lambda p: p.format(self.order)  # noqa: E731
        return {
            "l": self.shape.l,
            "m": self.shape.m,
            "linear1": [fmt(p) for p in self.linear1],
            "linear2": [fmt(p) for p in self.linear2],
            "A": [[fmt(e) for e in row] for row in self.matrixA],
            "minors": [fmt(p) for p in self.minors],
        }

    def to_text(self) -> str:
        fmt = lambda p: p.format(self.order)  # noqa: E731
        lines = [f"# linear forms, first family ({len(self.linear1)})"]
        lines += [fmt(p) for p in self.linear1]
        lines.append(f"# linear forms, second family ({len(self.linear2)})")
        lines += [fmt(p) for p in self.linear2]
        cols = len(self.matrixA[0]) if self.matrixA else 0
        lines.append(f"# matrix A ({len(self.matrixA)}x{cols}), one row per line, entries separated by ' ; '")
        lines += [" ; ".join(fmt(e) for e in row) for row in self.matrixA]
        lines.append(f"# 2x2 minors of A ({len(self.minors)})")
        lines += [fmt(p) for p in self.minors]
        return "\n".join(lines) + "\n"


def _linrel1_indices(shape: ModelShape):
    m = str(shape.m)
    for w in shape.states():
        if sum(c != m for c in w[:-1]) >= 2:
            yield w


def build_linrel1(shape: ModelShape) -> list[Polynomial]:
    return [_linrel1(shape, w) for w in _linrel1_indices(shape)]


def _linrel1(shape: ModelShape, w: str) -> Polynomial:
    l = shape.l
    last = int(w[-1])
    terms = [P(w)]
    for j in range(l):
        terms.append(-P(shape.special(j, int(w[j]), last)))
    terms.append(P(shape.constant(last)).scale(l - 1))
    return sum_polys(terms)


def _linrel2_indices(shape: ModelShape):
    for j in range(shape.l):
        for i in range(1, shape.m):
            yield j, i


def build_linrel2(shape: ModelShape) -> list[Polynomial]:
    m = shape.m
    out = []
    for j, i in _linrel2_indices(shape):
        terms = [P(shape.special(j, i, r)) for r in range(1, m + 1)]
        terms += [-P(shape.constant(r)) for r in range(1, m + 1)]
        out.append(sum_polys(terms))
    return out


def _matrix_columns(shape: ModelShape):
    """Column labels ``(r, i)`` of ``A``: blocks ``r = 2..m``, then ``i = 1..m-1``."""
    return [(r, i) for r in range(2, shape.m + 1) for i in range(1, shape.m)]


def build_matrix_A(shape: ModelShape) -> list[list[Polynomial]]:
    cols = _matrix_columns(shape)
    return [[P(shape.special(j, i, r)) - P(shape.constant(r)) for r, i in cols]
            for j in range(shape.l)]


def build_minors(A) -> list[Polynomial]:
    rows = len(A)
    cols = len(A[0]) if A else 0
    return [A[j][a] * A[k][b] - A[j][b] * A[k][a]
            for j, k in combinations(range(rows), 2)
            for a, b in combinations(range(cols), 2)]


def expected_counts(shape: ModelShape) -> dict:
    l, m = shape.l, shape.m
    return {
        "linear1": m ** (l + 1) - m * (1 + l * (m - 1)),
        "linear2": l * (m - 1),
        "minors": comb(l, 2) * comb((m - 1) ** 2, 2),
        "free": l * (m - 1) ** 2 + (m - 1) + 1,
    }


def full_basis(shape: ModelShape, order: TermOrder = DEFAULT_ORDER) -> GeneratorSet:
    lin1 = build_linrel1(shape)
    lin2 = build_linrel2(shape)
    A = build_matrix_A(shape)
    minors = build_minors(A)
    cols = _matrix_columns(shape)
    leadA = [[_lead(shape.special(j, i, r)) for r, i in cols] for j in range(shape.l)]
    lead_minors = [mono_mul(leadA[j][a], leadA[k][b])
                   for j, k in combinations(range(shape.l), 2)
                   for a, b in combinations(range(len(cols)), 2)]
    gs = GeneratorSet(
        shape=shape, linear1=lin1, linear2=lin2, matrixA=A, minors=minors, order=order,
        lead1=[_lead(w) for w in _linrel1_indices(shape)],
        lead2=[_lead(shape.special(j, i, 1)) for j, i in _linrel2_indices(shape)],
        leadA=leadA, lead_minors=lead_minors,
    )
    want = expected_counts(shape)
    got = {"linear1": len(lin1), "linear2": len(lin2), "minors": len(minors)}
    for k, v in got.items():
        if v != want[k]:
            raise FormulaMismatch(f"{k}: built {v}, formula {want[k]}")
    return gs


# -- verification -------------------------------------------------------------

def verify_vanishing(shape: ModelShape) -> bool:
    """Every generator pulls back to the zero polynomial in the free parameters."""
    images = dict(zip((p_var(s) for s in shape.states()), symbolic_parametrize(shape)))
    gs = full_basis(shape)
    for g in gs.linear:
        if not g.subs(images).is_zero():
            return False
    A_img = [[e.subs(images) for e in row] for row in gs.matrixA]
    return all(mn.is_zero() for mn in build_minors(A_img))


def leading_terms_match(gs: GeneratorSet) -> bool:
    order = gs.order
    for g, lead in zip(gs.generators, gs.designated_leads):
        if g.leading_monomial(order) != lead:
            return False
    for row, lrow in zip(gs.matrixA, gs.leadA):
        for e, lead in zip(row, lrow):
            if e.leading_monomial(order) != lead:
                return False
    return True


def uses_unpruned_check(shape: ModelShape) -> bool:
    return shape.l <= UNPRUNED_LIMIT[0] and shape.m <= UNPRUNED_LIMIT[1]


def verify_groebner(shape: ModelShape, order: TermOrder = DEFAULT_ORDER,
                    criterion: bool | None = None) -> bool:
    """Designated leading terms are the true ones and all S-pairs reduce to zero."""
    gs = full_basis(shape, order)
    if not leading_terms_match(gs):
        return False
    if criterion is None:
        criterion = not uses_unpruned_check(shape)
    return buchberger_check(gs.generators, order, criterion=criterion)


def linear_coefficient_matrix(shape: ModelShape, polys) -> list[list[Fraction]]:
    states = shape.states()
    col = {p_var(s): i for i, s in enumerate(states)}
    rows = []
    for f in polys:
        row = [Fraction(0)] * len(states)
        for mono, c in f.items():
            if len(mono) != 1 or mono[0][1] != 1:
                raise ValueError(f"not a homogeneous linear form: {f}")
            row[col[mono[0][0]]] = c
        rows.append(row)
    return rows


def span_dimension(shape: ModelShape) -> int:
    """Projective dimension of the linear span of the variety."""
    gs = full_basis(shape)
    rank = exact_rank(linear_coefficient_matrix(shape, gs.linear)) if gs.linear else 0
    dim = shape.N - rank
    formula = (shape.m - 1) * (shape.l * shape.m - shape.l + 1)
    if dim != formula:
        raise FormulaMismatch(f"span dimension {dim} != (m-1)(lm-l+1) = {formula}")
    return dim


def initial_ideal(gs: GeneratorSet) -> list[Monomial]:
    return list(gs.designated_leads)


def variety_dim_degree(shape: ModelShape) -> tuple[int, int]:
    """Projective dimension and degree read off the initial ideal's Hilbert series."""
    gs = full_basis(shape)
    K = hilbert_numerator(initial_ideal(gs), shape.size)
    krull, degree = dimension_degree(K, shape.size)
    dim = krull - 1
    l, m = shape.l, shape.m
    if dim != (m - 1) * m + l - 1:
        raise FormulaMismatch(f"dimension {dim} != (m-1)m+l-1 = {(m - 1) * m + l - 1}")
    want = comb(l + (m - 1) ** 2 - 2, l - 1)
    if degree != want:
        raise FormulaMismatch(f"degree {degree} != binom(l+(m-1)^2-2, l-1) = {want}")
    return dim, degree
