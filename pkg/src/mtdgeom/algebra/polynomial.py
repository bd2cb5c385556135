"""Sparse multivariate polynomials over the rationals.

Variables are plain tuples:

* ``("p", "131")``  -- the state unknown ``p_131``
* ``("q", i, j)``   -- transition matrix entry ``q_i_j``
* ``("lam", j)``    -- mixture weight ``lam_j``

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable,
with no zero exponents.  Coefficients are :class:`fractions.Fraction`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping

Var = tuple
Monomial = tuple

ONE: Monomial = ()


def p_var(state: str) -> Var:
    return ("p", state)


def q_var(i: int, j: int) -> Var:
    return ("q", i, j)


def lam_var(j: int) -> Var:
    return ("lam", j)


def var_name(v: Var) -> str:
    kind = v[0]
    if kind == "p":
        return f"p_{v[1]}"
    if kind == "q":
        return f"q_{v[1]}_{v[2]}"
    if kind == "lam":
        return f"lam_{v[1]}"
    raise ValueError(f"unknown variable {v!r}")


_VAR_RE = re.compile(r"^(?:p_(\d+)|q_(\d+)_(\d+)|lam_(\d+))$")


def parse_var(name: str) -> Var:
    mt = _VAR_RE.match(name)
    if not mt:
        raise ValueError(f"not a variable name: {name!r}")
    if mt.group(1) is not None:
        return p_var(mt.group(1))
    if mt.group(2) is not None:
        return q_var(int(mt.group(2)), int(mt.group(3)))
    return lam_var(int(mt.group(4)))


# -- monomials ---------------------------------------------------------------

def monomial(*pairs) -> Monomial:
    """Build a canonical monomial from ``(var, exp)`` pairs (merging repeats)."""
    acc: dict = {}
    for v, e in pairs:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in acc.items() if e))


def mono_degree(a: Monomial) -> int:
    return sum(e for _, e in a)


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for v, e in b:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted(acc.items()))


def mono_divides(a: Monomial, b: Monomial) -> bool:
    """True iff ``a`` divides ``b``."""
    db = dict(b)
    return all(db.get(v, 0) >= e for v, e in a)


def mono_div(b: Monomial, a: Monomial) -> Monomial:
    """``b / a``; caller guarantees divisibility."""
    acc = dict(b)
    for v, e in a:
        r = acc[v] - e
        if r:
            acc[v] = r
        else:
            del acc[v]
    return tuple(sorted(acc.items()))


def mono_lcm(a: Monomial, b: Monomial) -> Monomial:
    acc = dict(a)
    for v, e in b:
        if e > acc.get(v, 0):
            acc[v] = e
    return tuple(sorted(acc.items()))


def mono_coprime(a: Monomial, b: Monomial) -> bool:
    va = {v for v, _ in a}
    return not any(v in va for v, _ in b)


def mono_str(a: Monomial) -> str:
    parts = []
    for v, e in a:
        parts.append(var_name(v) if e == 1 else f"{var_name(v)}^{e}")
    return "*".join(parts)


# -- term orders -------------------------------------------------------------

_PARAM_BASE = 10 ** 15


def _state_rank(s: str, ranking: str) -> int:
    # larger rank = greater variable; earlier string = greater
    if ranking == "suffix":
        return -int(s[::-1])
    return -int(s)


@lru_cache(maxsize=None)
def _var_rank(v: Var, ranking: str) -> int:
    kind = v[0]
    if kind == "p":
        return _state_rank(v[1], ranking)
    if kind == "q":
        return -(_PARAM_BASE + 1000 * v[1] + v[2])
    return -(2 * _PARAM_BASE + v[1])


@lru_cache(maxsize=None)
def _mono_key(mono: Monomial, kind: str, ranking: str):
    deg = sum(e for _, e in mono)
    if kind == "grevlex":
        body = tuple(sorted((_var_rank(v, ranking), -e) for v, e in mono))
        return (deg, body)
    body = tuple(sorted(((_var_rank(v, ranking), e) for v, e in mono), reverse=True))
    if kind == "lex":
        return body
    return (deg, body)


@dataclass(frozen=True)
class TermOrder:
    """Monomial order on state and parameter variables.

    ``kind`` is ``"grevlex"`` (default), ``"deglex"`` or ``"lex"``.  State
    variables are ranked by their index string: with ``ranking="suffix"``
    (default) strings are compared from the last symbol backwards, with
    ``ranking="prefix"`` from the first symbol; in both cases the earlier
    string is the greater variable.  Parameter variables rank below every
    state variable, ``q`` (row-major) above ``lam``.
    """

    kind: str = "grevlex"
    ranking: str = "suffix"

    def __post_init__(self):
        if self.kind not in ("grevlex", "deglex", "lex"):
            raise ValueError(f"unknown term order kind {self.kind!r}")
        if self.ranking not in ("suffix", "prefix"):
            raise ValueError(f"unknown variable ranking {self.ranking!r}")

    def key(self, mono: Monomial):
        """Sort key: ``key(a) < key(b)`` iff ``a < b`` in this order."""
        return _mono_key(mono, self.kind, self.ranking)

    def var_rank(self, v: Var) -> int:
        return _var_rank(v, self.ranking)


DEFAULT_ORDER = TermOrder()


def compare(a: Monomial, b: Monomial, order: TermOrder = DEFAULT_ORDER) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    ka, kb = order.key(a), order.key(b)
    return (ka > kb) - (ka < kb)


# -- polynomials -------------------------------------------------------------

def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


class Polynomial:
    """Immutable sparse polynomial ``{monomial: Fraction}``."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        t = {}
        if terms:
            for mono, c in terms.items():
                c = _coerce(c)
                if c:
                    t[mono] = c
        self._terms = t
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def var(cls, v: Var) -> "Polynomial":
        return cls._raw({((v, 1),): Fraction(1)})

    @classmethod
    def const(cls, c) -> "Polynomial":
        c = _coerce(c)
        return cls._raw({ONE: c} if c else {})

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls._raw({})

    # -- inspection
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE in self._terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coefficient(ONE)

    def degree(self) -> int:
        return max((mono_degree(m) for m in self._terms), default=-1)

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def leading_term(self, order: TermOrder = DEFAULT_ORDER):
        """``(monomial, coefficient)`` of the greatest term."""
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        mono = max(self._terms, key=order.key)
        return mono, self._terms[mono]

    def leading_monomial(self, order: TermOrder = DEFAULT_ORDER) -> Monomial:
        return self.leading_term(order)[0]

    # -- arithmetic
    def _other(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial.const(other)

    def __add__(self, other):
        try:
            o = self._other(other)
        except TypeError:
            return NotImplemented
        t = dict(self._terms)
        for m, c in o._terms.items():
            v = t.get(m, 0) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return Polynomial._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        try:
            o = self._other(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce(c)
        if not c:
            return Polynomial.zero()
        return Polynomial._raw({m: v * c for m, v in self._terms.items()})

    def mul_term(self, mono: Monomial, c) -> "Polynomial":
        c = _coerce(c)
        if not c:
            return Polynomial.zero()
        return Polynomial._raw({mono_mul(m, mono): v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        t: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = mono_mul(m1, m2)
                v = t.get(m, 0) + c1 * c2
                if v:
                    t[m] = v
                else:
                    t.pop(m, None)
        return Polynomial._raw(t)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.scale(1 / _coerce(c))

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._terms == other._terms
        try:
            return self._terms == Polynomial.const(other)._terms
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- calculus / substitution
    def diff(self, v: Var) -> "Polynomial":
        t: dict = {}
        for mono, c in self._terms.items():
            d = dict(mono)
            e = d.get(v)
            if not e:
                continue
            if e == 1:
                del d[v]
            else:
                d[v] = e - 1
            m = tuple(sorted(d.items()))
            t[m] = t.get(m, 0) + c * e
        return Polynomial({m: c for m, c in t.items()})

    def subs(self, mapping: Mapping[Var, object]) -> "Polynomial":
        """Substitute polynomials (or constants) for variables."""
        images = {v: (p if isinstance(p, Polynomial) else Polynomial.const(p))
                  for v, p in mapping.items()}
        powers: dict = {}

        def power(v, e):
            key = (v, e)
            if key not in powers:
                powers[key] = images[v] ** e
            return powers[key]

        out: dict = {}
        for mono, c in self._terms.items():
            keep = []
            acc = Polynomial.const(c)
            for v, e in mono:
                if v in images:
                    acc = acc * power(v, e)
                else:
                    keep.append((v, e))
            if keep:
                acc = acc.mul_term(tuple(keep), 1)
            for m, val in acc._terms.items():
                s = out.get(m, 0) + val
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Polynomial._raw(out)

    def evaluate(self, values: Mapping[Var, object]):
        """Evaluate at a point; every variable must be assigned."""
        total = 0
        for mono, c in self._terms.items():
            t = c
            for v, e in mono:
                t = t * values[v] ** e
            total = total + t
        return total

    # -- text format
    def format(self, order: TermOrder = DEFAULT_ORDER) -> str:
        if not self._terms:
            return "0"
        monos = sorted(self._terms, key=order.key, reverse=True)
        out = []
        for i, mono in enumerate(monos):
            c = self._terms[mono]
            neg = c < 0
            a = -c if neg else c
            if not mono:
                body = _frac_str(a)
            elif a == 1:
                body = mono_str(mono)
            else:
                body = f"{_frac_str(a)}*{mono_str(mono)}"
            if i == 0:
                out.append(f"-{body}" if neg else body)
            else:
                out.append(f" - {body}" if neg else f" + {body}")
        return "".join(out)

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"Polynomial({self.format()!r})"


def _frac_str(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def var(v: Var) -> Polynomial:
    return Polynomial.var(v)


def P(state: str) -> Polynomial:
    """Shorthand for the state unknown ``p_<state>`` as a polynomial."""
    return Polynomial.var(p_var(state))


_TERM_RE = re.compile(r"\s*([+-])?\s*([^+\-\s][^+\-]*?)\s*(?=[+-]|$)")


def parse_polynomial(text: str) -> Polynomial:
    """Parse the text format produced by :meth:`Polynomial.format`.

    Also accepts a unicode minus sign in place of ``-``.
    """
    text = text.replace("−", "-").strip()
    if text == "0":
        return Polynomial.zero()
    terms: dict = {}
    pos = 0
    for mt in _TERM_RE.finditer(text):
        if not mt.group(0).strip():
            continue
        if mt.start() != pos:
            raise ValueError(f"cannot parse polynomial near {text[pos:]!r}")
        pos = mt.end()
        sign = -1 if mt.group(1) == "-" else 1
        coeff = Fraction(sign)
        pairs = []
        for factor in mt.group(2).split("*"):
            factor = factor.strip()
            if re.fullmatch(r"\d+(/\d+)?", factor):
                coeff *= Fraction(factor)
                continue
            name, _, exp = factor.partition("^")
            pairs.append((parse_var(name), int(exp) if exp else 1))
        mono = monomial(*pairs)
        terms[mono] = terms.get(mono, 0) + coeff
    if pos != len(text):
        raise ValueError(f"cannot parse polynomial near {text[pos:]!r}")
    return Polynomial(terms)


def linear_form(coeffs: Mapping[Var, object], const=0) -> Polynomial:
    t = {((v, 1),): c for v, c in coeffs.items()}
    if const:
        t[ONE] = const
    return Polynomial(t)


def sum_polys(polys: Iterable[Polynomial]) -> Polynomial:
    t: dict = {}
    for p in polys:
        for m, c in p.items():
            v = t.get(m, 0) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
    return Polynomial._raw(t)
