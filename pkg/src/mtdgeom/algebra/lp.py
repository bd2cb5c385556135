"""A small exact linear-programming solver (two-phase simplex, Bland's rule).

Sizes here are tiny (a few dozen variables), so a dense Fraction tableau is
adequate and keeps every feasibility answer exact.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: list | None = None
    value: Fraction | None = None


def _pivot(T, basis, r, c):
    inv = 1 / T[r][c]
    T[r] = [x * inv for x in T[r]]
    pr = T[r]
    for i in range(len(T)):
        if i != r and T[i][c]:
            f = T[i][c]
            T[i] = [a - f * b for a, b in zip(T[i], pr)]
    basis[r] = c


def _simplex(T, basis, cost, allowed):
    """Minimise ``cost`` over the tableau (last column = rhs)."""
    ncols = len(T[0]) - 1
    while True:
        # reduced costs
        enter = None
        for j in range(ncols):
            if j not in allowed or j in basis:
                continue
            rc = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(len(T)))
            if rc < 0:
                enter = j
                break
        if enter is None:
            return OPTIMAL
        best = None
        for i in range(len(T)):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return UNBOUNDED
        _pivot(T, basis, best[1], enter)


def linprog_std(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Minimise ``c.x`` subject to ``A x = b``, ``x >= 0`` exactly."""
    c = [Fraction(x) for x in c]
    n = len(c)
    rows = []
    for row, bi in zip(A, b):
        row = [Fraction(x) for x in row]
        bi = Fraction(bi)
        if bi < 0:
            row = [-x for x in row]
            bi = -bi
        rows.append(row + [bi])
    m = len(rows)
    if m == 0:
        if any(x < 0 for x in c):
            return LPResult(UNBOUNDED)
        return LPResult(OPTIMAL, [Fraction(0)] * n, Fraction(0))
    # phase 1 with artificials n..n+m-1
    T = [row[:n] + [Fraction(int(i == k)) for k in range(m)] + [row[n]] for i, row in enumerate(rows)]
    basis = list(range(n, n + m))
    cost1 = [Fraction(0)] * n + [Fraction(1)] * m
    _simplex(T, basis, cost1, set(range(n + m)))
    if sum(T[i][-1] for i in range(m) if basis[i] >= n) != 0:
        return LPResult(INFEASIBLE)
    # drive artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if T[i][j] != 0 and j not in basis), None)
            if col is None:
                continue
            _pivot(T, basis, i, col)
        keep.append(i)
    T = [T[i][:n] + [T[i][-1]] for i in keep]
    basis = [basis[i] for i in keep]
    status = _simplex(T, basis, c, set(range(n)))
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * n
    for i, bcol in enumerate(basis):
        x[bcol] = T[i][-1]
    return LPResult(OPTIMAL, x, sum(ci * xi for ci, xi in zip(c, x)))


def linprog(c: Sequence, A_ub=(), b_ub=(), A_eq=(), b_eq=(), maximize: bool = False) -> LPResult:
    """Optimise ``c.x`` over free ``x`` with ``A_ub x <= b_ub`` and ``A_eq x = b_eq``."""
    n = len(c)
    sgn = -1 if maximize else 1
    k = len(A_ub)
    # x = xp - xm, slack s >= 0
    cc = [sgn * Fraction(x) for x in c] + [-sgn * Fraction(x) for x in c] + [Fraction(0)] * k
    A, b = [], []
    for i, (row, bi) in enumerate(zip(A_ub, b_ub)):
        row = [Fraction(x) for x in row]
        A.append(row + [-x for x in row] + [Fraction(int(i == j)) for j in range(k)])
        b.append(bi)
    for row, bi in zip(A_eq, b_eq):
        row = [Fraction(x) for x in row]
        A.append(row + [-x for x in row] + [Fraction(0)] * k)
        b.append(bi)
    res = linprog_std(cc, A, b)
    if res.status != OPTIMAL:
        return res
    x = [res.x[i] - res.x[n + i] for i in range(n)]
    return LPResult(OPTIMAL, x, sum(Fraction(ci) * xi for ci, xi in zip(c, x)))


def feasible(A_ub=(), b_ub=(), A_eq=(), b_eq=(), n: int | None = None) -> bool:
    if n is None:
        n = len(A_ub[0]) if A_ub else len(A_eq[0])
    return linprog([0] * n, A_ub, b_ub, A_eq, b_eq).status == OPTIMAL


def strictly_feasible(A_strict, b_strict, A_eq=(), b_eq=(), n: int | None = None) -> bool:
    """Is ``{x : A_strict x < b_strict, A_eq x = b_eq}`` nonempty?"""
    if n is None:
        n = len(A_strict[0]) if A_strict else len(A_eq[0])
    if not A_strict:
        return feasible((), (), A_eq, b_eq, n=n)
    # maximise eps with A x + eps <= b, eps <= 1
    A_ub = [list(row) + [1] for row in A_strict] + [[0] * n + [1]]
    b_ub = list(b_strict) + [1]
    A_e = [list(row) + [0] for row in A_eq]
    res = linprog([0] * n + [1], A_ub, b_ub, A_e, b_eq, maximize=True)
    return res.status == OPTIMAL and res.value > 0
