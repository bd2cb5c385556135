"""Hilbert series numerators of monomial ideals by pivot splitting.

For a monomial ideal ``I`` in ``n`` variables the Hilbert series of
``S/I`` is ``K(t) / (1 - t)^n``; this module computes ``K`` exactly, as a
list of integer coefficients (index = power of ``t``).
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache

from .polynomial import Monomial, Polynomial


def _padd(a, b):
    n = max(len(a), len(b))
    out = [0] * n
    for i, x in enumerate(a):
        out[i] += x
    for i, x in enumerate(b):
        out[i] += x
    return _trim(out)


def _pmul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _minimalize(gens):
    gens = sorted(set(gens), key=lambda g: (sum(e for _, e in g), g))
    out = []
    for g in gens:
        dg = dict(g)
        if any(all(dg.get(v, 0) >= e for v, e in h) for h in out):
            continue
        out.append(g)
    return tuple(sorted(out))


def _one_minus_t_pow(d):
    out = [0] * (d + 1)
    out[0] = 1
    out[d] -= 1
    return _trim(out)


@lru_cache(maxsize=None)
def _numerator(gens: tuple) -> tuple:
    if not gens:
        return (1,)
    if any(not g for g in gens):
        return ()  # unit ideal
    # split into variable-disjoint components
    comps = _components(gens)
    if len(comps) > 1:
        out = [1]
        for c in comps:
            out = _pmul(out, _numerator(c))
        return tuple(out)
    if len(gens) == 1:
        return tuple(_one_minus_t_pow(sum(e for _, e in gens[0])))
    counts = Counter(v for g in gens for v, _ in g)
    pivot = max(sorted(counts), key=lambda v: counts[v])
    # I + <x>
    plus = _minimalize([g for g in gens if pivot not in dict(g)] + [((pivot, 1),)])
    # I : x
    colon = []
    for g in gens:
        d = dict(g)
        if pivot in d:
            if d[pivot] == 1:
                del d[pivot]
            else:
                d[pivot] -= 1
        colon.append(tuple(sorted(d.items())))
    colon = _minimalize(colon)
    return tuple(_padd(_numerator(plus), [0] + list(_numerator(colon))))


def _components(gens):
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        vs = [v for v, _ in g]
        for v in vs:
            parent.setdefault(v, v)
        for v in vs[1:]:
            a, b = find(vs[0]), find(v)
            if a != b:
                parent[a] = b
    groups: dict = {}
    for g in gens:
        groups.setdefault(find(g[0][0]), []).append(g)
    return [tuple(sorted(v)) for _, v in sorted(groups.items())]


def hilbert_numerator(gens, nvars: int) -> list[int]:
    """Numerator ``K(t)`` of the Hilbert series of ``S/<gens>``.

    ``gens`` are monomials, or polynomials consisting of a single monomial
    with coefficient 1.
    """
    monos = []
    for g in gens:
        if isinstance(g, Polynomial):
            if len(g) != 1 or next(iter(g.items()))[1] != 1:
                raise ValueError(f"generator is not a monomial: {g}")
            g = next(iter(g.items()))[0]
        elif not isinstance(g, tuple):
            raise ValueError(f"generator is not a monomial: {g!r}")
        monos.append(g)
    if len({v for g in monos for v, _ in g}) > nvars:
        raise ValueError("generators involve more than nvars variables")
    return list(_numerator(_minimalize(monos)))


def dimension_degree(K: list[int], nvars: int) -> tuple[int, int]:
    """Krull dimension and degree from a Hilbert numerator.

    Divides ``K`` by ``(1 - t)`` while ``K(1) == 0``; the number of divisions
    is the codimension and the quotient at ``t = 1`` is the degree.
    """
    if not K:
        raise ValueError("unit ideal has no dimension")
    K = list(K)
    codim = 0
    while sum(K) == 0:
        # synthetic division by (1 - t): K = (1 - t) Q  =>  Q_i = sum_{k<=i} K_k
        Q, acc = [], 0
        for c in K[:-1]:
            acc += c
            Q.append(acc)
        K = _trim(Q)
        codim += 1
    return nvars - codim, sum(K)
