"""Multivariate division, S-polynomials and the Buchberger criterion.

Only *checking* is supported: given a candidate basis, decide whether every
S-pair reduces to zero.  No completion is ever attempted.
"""
from __future__ import annotations

from typing import Sequence

from .polynomial import (
    DEFAULT_ORDER,
    Monomial,
    Polynomial,
    TermOrder,
    mono_coprime,
    mono_div,
    mono_divides,
    mono_lcm,
    mono_mul,
)


class DivisorIndex:
    """Leading terms of a basis, indexed by variable for fast divisor lookup."""

    def __init__(self, basis: Sequence[Polynomial], order: TermOrder = DEFAULT_ORDER):
        self.basis = list(basis)
        self.order = order
        self.leading = []
        self._by_var: dict = {}
        self._units = []
        for i, g in enumerate(self.basis):
            if g.is_zero():
                raise ValueError("basis contains the zero polynomial")
            lm, lc = g.leading_term(order)
            self.leading.append((lm, lc))
            if not lm:
                self._units.append(i)
            for v, _ in lm:
                self._by_var.setdefault(v, []).append(i)

    def find(self, mono: Monomial):
        """Index of the first basis element (in list order) whose LM divides ``mono``."""
        best = self._units[0] if self._units else None
        for v, _ in mono:
            for i in self._by_var.get(v, ()):
                if best is not None and i >= best:
                    break
                if mono_divides(self.leading[i][0], mono):
                    best = i
                    break
        return best


def reduce(f: Polynomial, basis, order: TermOrder = DEFAULT_ORDER) -> Polynomial:
    """Normal form of ``f`` modulo ``basis``.

    Always the greatest reducible term is eliminated next, using the first
    divisor in list order, so the result is deterministic.  ``basis`` may be
    a prepared :class:`DivisorIndex`.
    """
    idx = basis if isinstance(basis, DivisorIndex) else DivisorIndex(basis, order)
    order = idx.order
    key = order.key
    p = dict(f.items())
    rem: dict = {}
    while p:
        mono = max(p, key=key)
        c = p[mono]
        i = idx.find(mono)
        if i is None:
            rem[mono] = c
            del p[mono]
            continue
        lm, lc = idx.leading[i]
        shift = mono_div(mono, lm)
        coef = c / lc
        for gm, gc in idx.basis[i].items():
            m2 = mono_mul(gm, shift)
            v = p.get(m2, 0) - coef * gc
            if v:
                p[m2] = v
            else:
                p.pop(m2, None)
    return Polynomial(rem)


def s_polynomial(f: Polynomial, g: Polynomial, order: TermOrder = DEFAULT_ORDER) -> Polynomial:
    fm, fc = f.leading_term(order)
    gm, gc = g.leading_term(order)
    lcm = mono_lcm(fm, gm)
    return f.mul_term(mono_div(lcm, fm), 1 / fc) - g.mul_term(mono_div(lcm, gm), 1 / gc)


def buchberger_check(basis: Sequence[Polynomial], order: TermOrder = DEFAULT_ORDER,
                     criterion: bool = True) -> bool:
    """True iff every S-pair of ``basis`` reduces to zero.

    With ``criterion`` set, pairs with coprime leading monomials are skipped
    (Buchberger's first criterion).
    """
    return next(iter(failing_pairs(basis, order, criterion)), None) is None


def failing_pairs(basis: Sequence[Polynomial], order: TermOrder = DEFAULT_ORDER,
                  criterion: bool = True):
    """Yield ``(i, j, remainder)`` for every S-pair with nonzero normal form."""
    idx = DivisorIndex(basis, order)
    lms = [lm for lm, _ in idx.leading]
    n = len(basis)
    for i in range(n):
        for j in range(i + 1, n):
            if criterion and mono_coprime(lms[i], lms[j]):
                continue
            r = reduce(s_polynomial(basis[i], basis[j], order), idx)
            if r:
                yield i, j, r
