"""Hyperplane arrangements on the binary model's linear span and their bounded regions.

The ML degree of the linear span of the binary model equals the number of
bounded regions cut out on it by the coordinate hyperplanes ``{p_w = 0}``.
Two independent counters are provided:

* Zaslavsky: enumerate the intersection poset, compute the Moebius function
  and evaluate the characteristic polynomial at ``t = 1``;
* direct enumeration: split regions one hyperplane at a time with exact LP
  feasibility tests and test each final region's recession cone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import binary_geom
from .algebra.linalg import exact_rank, primitive
from .algebra.lp import OPTIMAL, linprog, strictly_feasible
from .errors import OracleMismatch


def _normalize(a: Sequence, b) -> tuple[tuple[int, ...], int] | None:
    """Primitive integer form of ``a.x = b`` with the first nonzero of ``a`` positive."""
    vals = [Fraction(x) for x in a] + [Fraction(b)]
    if not any(vals[:-1]):
        return None
    prim = primitive(vals)
    lead = next(x for x in prim[:-1] if x)
    if lead < 0:
        prim = tuple(-x for x in prim)
    return prim[:-1], prim[-1]


@dataclass(frozen=True)
class Hyperplane:
    """``{x : a . x = b}`` with integer, primitive, sign-normalised coefficients."""

    a: tuple
    b: int
    label: str = ""

    def value(self, x) -> Fraction:
        return sum((ai * xi for ai, xi in zip(self.a, x)), Fraction(0)) - self.b


@dataclass
class Arrangement:
    dim: int
    hyperplanes: list
    dropped: list = field(default_factory=list)   # labels of constant (empty or everything) hyperplanes

    @property
    def size(self) -> int:
        return len(self.hyperplanes)

    def rank(self) -> int:
        if not self.hyperplanes:
            return 0
        return exact_rank([list(h.a) for h in self.hyperplanes])

    def is_essential(self) -> bool:
        return self.rank() == self.dim


def make_arrangement(dim: int, planes: Sequence[tuple]) -> Arrangement:
    """Build from ``(a, b, label)`` triples, merging coincident hyperplanes."""
    seen: dict = {}
    dropped = []
    for a, b, label in planes:
        key = _normalize(a, b)
        if key is None:
            dropped.append(label)
            continue
        if key in seen:
            seen[key] = Hyperplane(key[0], key[1], seen[key].label + "=" + label)
        else:
            seen[key] = Hyperplane(key[0], key[1], label)
    return Arrangement(dim, list(seen.values()), dropped)


def build_arrangement(l: int, chart: binary_geom.AffineChart | None = None) -> Arrangement:
    """Restrictions of the coordinate hyperplanes ``{p_w = 0}`` to the chart of the span."""
    chart = chart or binary_geom.affine_chart(l)
    states = binary_geom._shape(l).states()
    planes = []
    for w, s in enumerate(states):
        a = [v[w] for v in chart.basis]
        planes.append((a, -chart.origin[w], "p_" + s))
    return make_arrangement(chart.dim, planes)


# -- intersection poset ----------------------------------------------------------------

@dataclass
class Flat:
    """A flat stored as ``num / den + span(directions)`` with integer data."""

    mask: int
    dim: int
    num: tuple
    den: int
    directions: tuple
    parents: set = field(default_factory=set)   # masks of flats one dimension up containing this one

    @property
    def point(self) -> tuple:
        return tuple(Fraction(x, self.den) for x in self.num)


def _idot(a, x) -> int:
    return sum(ai * xi for ai, xi in zip(a, x))


def _contains(h: Hyperplane, num, den, directions) -> bool:
    if _idot(h.a, num) != h.b * den:
        return False
    return all(_idot(h.a, d) == 0 for d in directions)


def _mask_of(A: Arrangement, num, den, directions) -> int:
    mask = 0
    for i, h in enumerate(A.hyperplanes):
        if _contains(h, num, den, directions):
            mask |= 1 << i
    return mask


def _cut(h: Hyperplane, num, den, directions):
    """Intersection of the flat with ``h`` (``None`` if disjoint); assumes ``h`` does not contain it."""
    c = [_idot(h.a, d) for d in directions]
    piv = next((i for i, ci in enumerate(c) if ci), None)
    if piv is None:
        return None
    cp = c[piv]
    dp = directions[piv]
    gap = h.b * den - _idot(h.a, num)
    new_num = [x * cp + gap * y for x, y in zip(num, dp)]
    new_den = den * cp
    g = math.gcd(new_den, *new_num)
    if new_den < 0:
        g = -g
    new_num = tuple(x // g for x in new_num)
    new_den //= g
    new_dirs = []
    for k, d in enumerate(directions):
        if k == piv:
            continue
        new_dirs.append(primitive([cp * x - c[k] * y for x, y in zip(d, dp)]))
    return new_num, new_den, tuple(new_dirs)


def flats(A: Arrangement) -> dict[int, Flat]:
    """All nonempty flats keyed by the bitmask of hyperplanes containing them.

    Breadth-first by dimension; each child of a flat is produced once, and
    all of its covering flats are recorded as parents.
    """
    d = A.dim
    top = Flat(0, d, (0,) * d, 1, tuple(tuple(int(i == j) for j in range(d)) for i in range(d)))
    out = {0: top}
    level = [top]
    full = (1 << A.size) - 1
    while level:
        nxt: dict[int, Flat] = {}
        for F in level:
            done = F.mask
            for i, h in enumerate(A.hyperplanes):
                bit = 1 << i
                if done & bit:
                    continue
                cut = _cut(h, F.num, F.den, F.directions)
                if cut is None:
                    done |= bit
                    continue
                num, den, dirs = cut
                child_mask = _mask_of(A, num, den, dirs)
                done |= child_mask
                child = nxt.get(child_mask)
                if child is None:
                    child = Flat(child_mask, F.dim - 1, num, den, dirs)
                    nxt[child_mask] = child
                child.parents.add(F.mask)
                if done == full:
                    break
        out.update(nxt)
        level = list(nxt.values())
    return out


def moebius(poset: dict[int, Flat]) -> dict[int, int]:
    """``mu(whole space, F)`` for every flat ``F``."""
    order = sorted(poset.values(), key=lambda F: -F.dim)
    up: dict[int, frozenset] = {}
    mu: dict[int, int] = {}
    for F in order:
        if not F.parents:
            up[F.mask] = frozenset()
            mu[F.mask] = 1
            continue
        s = set()
        for p in F.parents:
            s.add(p)
            s |= up[p]
        up[F.mask] = frozenset(s)
        mu[F.mask] = -sum(mu[g] for g in s)
    return mu


def characteristic_polynomial(A: Arrangement) -> list[int]:
    """Coefficients ``c[k]`` of ``t**k`` in ``chi_A(t) = sum_F mu(F) t**dim F``."""
    P = flats(A)
    mu = moebius(P)
    coeffs = [0] * (A.dim + 1)
    for mask, F in P.items():
        coeffs[F.dim] += mu[mask]
    return coeffs


def eval_poly(coeffs: Sequence[int], t) -> int:
    return sum(c * t ** k for k, c in enumerate(coeffs))


def region_counts(A: Arrangement, chi: Sequence[int] | None = None) -> tuple[int, int]:
    """``(all regions, bounded regions)`` by Zaslavsky's theorem."""
    chi = chi if chi is not None else characteristic_polynomial(A)
    total = (-1) ** A.dim * eval_poly(chi, -1)
    r = A.rank()
    bounded = (-1) ** r * eval_poly(chi, 1) if r == A.dim else 0
    return total, bounded


CROSS_CHECK_MAX_DIM = 3


def bounded_regions(A: Arrangement, cross_check: bool | None = None) -> int:
    """Bounded regions by Zaslavsky; in dimension <= 3 also by direct enumeration."""
    total, bounded = region_counts(A)
    if cross_check is None:
        cross_check = A.dim <= CROSS_CHECK_MAX_DIM
    if cross_check:
        direct = bounded_regions_direct(A)
        if direct != (total, bounded):
            raise OracleMismatch(f"Zaslavsky gives {(total, bounded)}, enumeration gives {direct}")
    return bounded


# -- direct enumeration ---------------------------------------------------------------

def _side_rows(A: Arrangement, signs: Sequence[int], upto: int):
    """Rows of ``sigma_i (a_i . x - b_i) > 0`` written as ``-sigma_i a_i . x < -sigma_i b_i``."""
    rows, rhs = [], []
    for s, h in zip(signs, A.hyperplanes[:upto]):
        rows.append([-s * x for x in h.a])
        rhs.append(-s * h.b)
    return rows, rhs


def _is_bounded(A: Arrangement, signs: Sequence[int]) -> bool:
    """A region is bounded iff its recession cone ``{y : sigma_i a_i . y >= 0}`` is zero."""
    d = A.dim
    rows = [[-s * x for x in h.a] for s, h in zip(signs, A.hyperplanes)]
    box = []
    for k in range(d):
        e = [0] * d
        e[k] = 1
        box.append(e)
        box.append([-x for x in e])
    A_ub = rows + box
    b_ub = [0] * len(rows) + [1] * len(box)
    for k in range(d):
        for sgn in (1, -1):
            c = [0] * d
            c[k] = sgn
            res = linprog(c, A_ub, b_ub, maximize=True)
            if res.status == OPTIMAL and res.value > 0:
                return False
    return True


def enumerate_regions(A: Arrangement) -> list[tuple[int, ...]]:
    """Sign vectors of all regions, by splitting regions one hyperplane at a time."""
    regions: list[tuple[int, ...]] = [()]
    for k in range(A.size):
        nxt = []
        for sig in regions:
            for s in (1, -1):
                cand = sig + (s,)
                rows, rhs = _side_rows(A, cand, k + 1)
                if strictly_feasible(rows, rhs, n=A.dim):
                    nxt.append(cand)
        regions = nxt
    return regions


def bounded_regions_direct(A: Arrangement) -> tuple[int, int]:
    """``(all regions, bounded regions)`` by explicit enumeration."""
    regions = enumerate_regions(A)
    return len(regions), sum(1 for sig in regions if _is_bounded(A, sig))


# -- deletion and restriction -----------------------------------------------------------

def _dot(a, x):
    return sum((ai * xi for ai, xi in zip(a, x)), Fraction(0))


def deletion(A: Arrangement, index: int) -> Arrangement:
    hs = [h for i, h in enumerate(A.hyperplanes) if i != index]
    return Arrangement(A.dim, hs)


def restriction(A: Arrangement, index: int) -> Arrangement:
    """The arrangement induced on hyperplane ``index``, in coordinates of that hyperplane."""
    H = A.hyperplanes[index]
    d = A.dim
    piv = next(i for i, x in enumerate(H.a) if x)
    # x = x0 + sum_k y_k v_k parametrises H
    x0 = [Fraction(0)] * d
    x0[piv] = Fraction(H.b, H.a[piv])
    dirs = []
    for j in range(d):
        if j == piv:
            continue
        v = [Fraction(0)] * d
        v[j] = Fraction(1)
        v[piv] = Fraction(-H.a[j], H.a[piv])
        dirs.append(v)
    planes = []
    for i, h in enumerate(A.hyperplanes):
        if i == index:
            continue
        a = [_dot(h.a, v) for v in dirs]
        b = h.b - _dot(h.a, x0)
        if not any(a):
            continue            # parallel to H: misses it (coincident planes were merged)
        planes.append((a, b, h.label))
    return make_arrangement(d - 1, planes)


# -- ML degree ----------------------------------------------------------------------------

def ml_degree(l: int, chart: binary_geom.AffineChart | None = None,
              cross_check: bool | None = None) -> int:
    """ML degree of the linear span of the binary model with ``l`` lags."""
    return bounded_regions(build_arrangement(l, chart), cross_check)


def ml_degree_table(max_l: int) -> dict[int, int]:
    return {l: ml_degree(l) for l in range(1, max_l + 1)}
