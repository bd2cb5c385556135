"""Exact polyhedral geometry of the binary model (two symbols).

For ``m = 2`` the Zariski closure is a linear space of dimension ``l+1``.
Its nonnegative part is a cross-polytope ``P`` with vertices

* ``E[r][s]`` (lag position ``r``, symbol ``s``): mass ``2**-l`` on every
  ``w1`` with ``w_r = s`` and on every ``w2`` with ``w_r != s``;
* the apexes ``u1 = 2**-l * sum_w e_{w1}`` and ``u2 = 2**-l * sum_w e_{w2}``.

The model is the union of the two simplices ``conv(u1, u2, E[0][s], ...,
E[l-1][s])`` for ``s = 1, 2``, glued along the diagonal ``S = [u1, u2]``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

from .algebra.linalg import determinant, exact_rank, nullspace, rref, solve
from .algebra.lp import feasible
from .algebra.polynomial import P, Polynomial, p_var, sum_polys
from .errors import ShapeError
from .model import ModelShape, ProbTensor

REAL_TOL = 1e-9


def _shape(l: int) -> ModelShape:
    return ModelShape(l, 2)


def _prefixes(l: int):
    return ["".join(t) for t in itertools.product("12", repeat=l)]


def _flip(c: str) -> str:
    return "2" if c == "1" else "1"


def linear_constraints(l: int) -> list[Polynomial]:
    """Inhomogeneous relations ``p_w1 + p_w2 - 2**-l`` and the exchange relations.

    Exchange relations: for prefixes ``w`` and positions ``r < s``,
    ``p_{w1} + p_{w~1} - p_{w'1} - p_{w''1}`` where ``w~`` flips both positions
    and ``w'``, ``w''`` flip one each.  Duplicates (up to sign) are dropped.
    """
    if l < 1:
        raise ShapeError("l must be positive")
    half = Fraction(1, 2 ** l)
    out = [P(w + "1") + P(w + "2") - half for w in _prefixes(l)]
    seen = set()
    for w in _prefixes(l):
        for r, s in itertools.combinations(range(l), 2):
            a = list(w)
            both = a.copy()
            both[r], both[s] = _flip(a[r]), _flip(a[s])
            only_s = a.copy()
            only_s[s] = _flip(a[s])
            only_r = a.copy()
            only_r[r] = _flip(a[r])
            rel = sum_polys([P(w + "1"), P("".join(both) + "1"),
                             -P("".join(only_s) + "1"), -P("".join(only_r) + "1")])
            if rel.is_zero():
                continue
            key = frozenset(rel.items())
            neg = frozenset((-rel).items())
            if key in seen or neg in seen:
                continue
            seen.add(key)
            out.append(rel)
    return out


@lru_cache(maxsize=None)
def constraint_matrix(l: int) -> tuple[tuple, tuple]:
    """``(A, b)`` with the constraints written as ``A p = b`` in state order."""
    states = _shape(l).states()
    col = {p_var(s): i for i, s in enumerate(states)}
    A, b = [], []
    for rel in linear_constraints(l):
        row = [Fraction(0)] * len(states)
        const = Fraction(0)
        for mono, c in rel.items():
            if not mono:
                const = c
            else:
                row[col[mono[0][0]]] = c
        A.append(tuple(row))
        b.append(-const)
    return tuple(A), tuple(b)


@lru_cache(maxsize=None)
def _sparse_constraints(l: int):
    A, b = constraint_matrix(l)
    return [([(j, a) for j, a in enumerate(row) if a], bi) for row, bi in zip(A, b)]


@dataclass(frozen=True)
class AffineChart:
    """Affine coordinates ``x`` on the solution space: ``p = origin + sum_k x_k basis[k]``."""

    l: int
    origin: tuple
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_ambient(self, x) -> list:
        out = list(self.origin)
        for xk, v in zip(x, self.basis):
            if xk:
                out = [o + xk * vi for o, vi in zip(out, v)]
        return out

    def to_chart(self, p) -> list:
        """Chart coordinates of an ambient point on the affine space (exact)."""
        d = [Fraction(pi) - o for pi, o in zip(p, self.origin)]
        rows, inv = _left_inverse(self)
        x = [sum((a * d[r] for a, r in zip(inv_row, rows)), Fraction(0)) for inv_row in inv]
        back = self.to_ambient(x)
        if any(b != Fraction(pi) for b, pi in zip(back, p)):
            raise ValueError("point does not lie on the chart's affine space")
        return x

    def to_chart_real(self, p) -> np.ndarray:
        B = np.array([[float(x) for x in v] for v in self.basis]).T
        d = np.asarray(p, dtype=float) - np.array([float(o) for o in self.origin])
        x, *_ = np.linalg.lstsq(B, d, rcond=None)
        return x

    def matrix_real(self) -> tuple[np.ndarray, np.ndarray]:
        """``(origin, B)`` as floats, ``p = origin + B @ x``."""
        return (np.array([float(o) for o in self.origin]),
                np.array([[float(x) for x in v] for v in self.basis]).T)

    def transformed(self, T, shift) -> "AffineChart":
        """Another chart of the same space: ``basis' = T @ basis``, ``origin' = origin + shift . basis``."""
        T = [[Fraction(x) for x in row] for row in T]
        if exact_rank(T) != self.dim:
            raise ValueError("transformation must be invertible")
        basis = tuple(tuple(sum((t * v[i] for t, v in zip(row, self.basis)), Fraction(0))
                            for i in range(len(self.origin))) for row in T)
        origin = tuple(self.to_ambient([Fraction(s) for s in shift]))
        return AffineChart(self.l, origin, basis)


@lru_cache(maxsize=None)
def _left_inverse(chart: AffineChart):
    """Coordinate rows on which the basis is invertible, and that square inverse."""
    _, rows = rref([list(v) for v in chart.basis])
    k = len(rows)
    sq = [[chart.basis[j][r] for j in range(k)] for r in rows]
    inv = []
    for i in range(k):
        e = [Fraction(int(i == t)) for t in range(k)]
        inv.append(solve([list(r) for r in zip(*sq)], e))
    # inv[i] solves sq^T y = e_i, i.e. row i of sq^-1
    return rows, inv


@lru_cache(maxsize=None)
def affine_chart(l: int) -> AffineChart:
    """Chart centred at the uniform distribution, kernel basis from the reduced echelon form."""
    A, _ = constraint_matrix(l)
    n = 2 ** (l + 1)
    origin = tuple([Fraction(1, n)] * n)
    basis = tuple(tuple(v) for v in nullspace(A, n))
    return AffineChart(l, origin, basis)


def satisfies_constraints(l: int, p, tol: float | None = None) -> bool:
    if tol is None:
        return all(sum(a * p[j] for j, a in row) == bi for row, bi in _sparse_constraints(l))
    A, b = constraint_matrix(l)
    pa = np.asarray(p, dtype=float)
    Aa = np.array(A, dtype=float)
    return bool(np.max(np.abs(Aa @ pa - np.array(b, dtype=float))) <= tol)


# -- vertices -------------------------------------------------------------------

@dataclass(frozen=True)
class CrossPolytope:
    l: int
    E: tuple       # E[r][s-1]
    u1: tuple
    u2: tuple

    @property
    def vertices(self) -> list:
        """Ordered ``E_{0,1}, E_{0,2}, ..., E_{l-1,2}, u1, u2``."""
        out = [v for pair in self.E for v in pair]
        return out + [self.u1, self.u2]

    def vertex_labels(self) -> list[str]:
        return [f"E_{r},{s}" for r in range(self.l) for s in (1, 2)] + ["u1", "u2"]

    @property
    def diagonal(self) -> tuple:
        return (self.u1, self.u2)


def _E(l: int, r: int, s: int) -> tuple:
    scale = Fraction(1, 2 ** l)
    vals = []
    for st in _shape(l).states():
        w, last = st[:-1], st[-1]
        hit = (w[r] == str(s)) if last == "1" else (w[r] != str(s))
        vals.append(scale if hit else Fraction(0))
    return tuple(vals)


def _apex(l: int, last: str) -> tuple:
    scale = Fraction(1, 2 ** l)
    return tuple(scale if st[-1] == last else Fraction(0) for st in _shape(l).states())


def is_extreme(points: list, idx: int) -> bool:
    """``points[idx]`` is not a convex combination of the other points (exact LP)."""
    others = [pt for k, pt in enumerate(points) if k != idx]
    target = points[idx]
    dim = len(target)
    A_eq = [[pt[i] for pt in others] for i in range(dim)] + [[1] * len(others)]
    b_eq = list(target) + [1]
    # lam >= 0 as -lam <= 0
    n = len(others)
    A_ub = [[-int(i == k) for i in range(n)] for k in range(n)]
    return not feasible(A_ub, [0] * n, A_eq, b_eq, n=n)


@lru_cache(maxsize=None)
def cross_polytope(l: int, check_extreme: bool = True) -> CrossPolytope:
    if l < 1:
        raise ShapeError("l must be positive")
    E = tuple((_E(l, r, 1), _E(l, r, 2)) for r in range(l))
    cp = CrossPolytope(l, E, _apex(l, "1"), _apex(l, "2"))
    for v in cp.vertices:
        if not satisfies_constraints(l, v):
            raise AssertionError("vertex violates the linear constraints")
    if check_extreme:
        chart = affine_chart(l)
        pts = [chart.to_chart(v) for v in cp.vertices]
        for k in range(len(pts)):
            if not is_extreme(pts, k):
                raise AssertionError(f"vertex {cp.vertex_labels()[k]} is not extreme")
    return cp


@dataclass(frozen=True)
class ModelSimplex:
    side: int
    vertices: tuple  # (u1, u2, E_{0,side}, ..., E_{l-1,side})


def model_simplices(l: int) -> tuple[ModelSimplex, ModelSimplex]:
    cp = cross_polytope(l)
    return tuple(ModelSimplex(s, (cp.u1, cp.u2) + tuple(cp.E[r][s - 1] for r in range(l)))
                 for s in (1, 2))


def triangulation(l: int) -> list[tuple]:
    """The ``2**l`` simplices ``conv(u1, u2, E_{0,s_0}, ..., E_{l-1,s_{l-1}})`` covering ``P``."""
    cp = cross_polytope(l)
    out = []
    for signs in itertools.product((1, 2), repeat=l):
        out.append((cp.u1, cp.u2) + tuple(cp.E[r][s - 1] for r, s in enumerate(signs)))
    return out


def triangulation_signs(l: int) -> list[tuple]:
    return list(itertools.product((1, 2), repeat=l))


# -- membership -------------------------------------------------------------------

class Region(Enum):
    OUTSIDE_CLOSURE = "OutsideClosure"
    CLOSURE_ONLY = "ClosureOnly"
    IN_SIMPLEX_1 = "InSimplex1"
    IN_SIMPLEX_2 = "InSimplex2"
    ON_DIAGONAL = "OnDiagonalS"


@dataclass(frozen=True)
class Membership:
    region: Region
    barycentric: tuple | None = None   # w.r.t. the simplex's vertex list; (u1, u2) weights on S

    @property
    def in_model(self) -> bool:
        return self.region in (Region.IN_SIMPLEX_1, Region.IN_SIMPLEX_2, Region.ON_DIAGONAL)

    @property
    def side(self) -> int | None:
        return {Region.IN_SIMPLEX_1: 1, Region.IN_SIMPLEX_2: 2}.get(self.region)


def barycentric(vertices, point, chart: AffineChart | None = None):
    """Barycentric coordinates of ``point`` w.r.t. an ``(l+1)``-simplex (exact or real)."""
    l = int(round(np.log2(len(point)))) - 1
    chart = chart or affine_chart(l)
    exact = all(isinstance(x, (Fraction, int)) for x in point)
    if exact:
        X = [chart.to_chart(v) for v in vertices]
        x = chart.to_chart(point)
        A = [[X[k][i] for k in range(len(X))] for i in range(len(x))] + [[1] * len(X)]
        sol = solve(A, list(x) + [1])
        if sol is None:
            raise ValueError("vertices are affinely dependent")
        return tuple(sol)
    X = np.array([chart.to_chart_real([float(t) for t in v]) for v in vertices])
    x = chart.to_chart_real(point)
    A = np.vstack([X.T, np.ones(len(X))])
    sol, *_ = np.linalg.lstsq(A, np.append(x, 1.0), rcond=None)
    return tuple(sol)


def membership(l: int, p) -> Membership:
    """Classify a distribution relative to the binary model.

    ``p`` is a :class:`ProbTensor` or a sequence of ``2**(l+1)`` values.  Exact
    input is classified exactly; float input with tolerance ``1e-9`` on
    constraint residuals and barycentric coordinates.
    """
    vals = p.values if isinstance(p, ProbTensor) else p
    if len(vals) != 2 ** (l + 1):
        raise ShapeError(f"expected {2 ** (l + 1)} coordinates")
    exact = all(isinstance(x, (Fraction, int)) for x in vals)
    tol = None if exact else REAL_TOL
    if exact:
        nonneg = min(vals) >= 0
    else:
        vals = np.asarray(vals, dtype=float)
        nonneg = bool(vals.min() >= -REAL_TOL)
    if not nonneg or not satisfies_constraints(l, vals, tol):
        return Membership(Region.OUTSIDE_CLOSURE)
    T1, T2 = model_simplices(l)
    b1 = barycentric(T1.vertices, vals)
    b2 = barycentric(T2.vertices, vals)
    if exact:
        in1, in2 = min(b1) >= 0, min(b2) >= 0
        on_S = in1 and all(x == 0 for x in b1[2:])
    else:
        in1, in2 = min(b1) >= -REAL_TOL, min(b2) >= -REAL_TOL
        on_S = in1 and in2 and all(abs(x) <= REAL_TOL for x in b1[2:])
    if on_S or (in1 and in2):
        return Membership(Region.ON_DIAGONAL, tuple(b1[:2]))
    if in1:
        return Membership(Region.IN_SIMPLEX_1, tuple(b1))
    if in2:
        return Membership(Region.IN_SIMPLEX_2, tuple(b2))
    return Membership(Region.CLOSURE_ONLY)


# -- volumes ------------------------------------------------------------------------

def simplex_volume(vertices, chart: AffineChart | None = None) -> Fraction:
    """Volume of a full-dimensional simplex in chart coordinates: ``|det(v_i - v_0)| / k!``."""
    l = int(round(np.log2(len(vertices[0])))) - 1
    chart = chart or affine_chart(l)
    X = [chart.to_chart(v) for v in vertices]
    D = [[a - b for a, b in zip(x, X[0])] for x in X[1:]]
    return abs(determinant(D)) / factorial(len(D))


def gram_volume_squared(vertices) -> Fraction:
    """Squared volume of a simplex from the Gram determinant of its ambient edge vectors."""
    D = [[a - b for a, b in zip(v, vertices[0])] for v in vertices[1:]]
    G = [[sum(x * y for x, y in zip(r, c)) for c in D] for r in D]
    return determinant(G) / factorial(len(D)) ** 2


def volume_ratio(l: int) -> Fraction:
    """``vol(model) / vol(closure cap simplex)``, computed from exact volumes."""
    T1, T2 = model_simplices(l)
    model = simplex_volume(T1.vertices) + simplex_volume(T2.vertices)
    total = sum(simplex_volume(T) for T in triangulation(l))
    return model / total
