"""Exact linear algebra over the rationals."""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Sequence


def _integer_rows(M) -> list[list[int]]:
    out = []
    for row in M:
        row = [Fraction(x) for x in row]
        d = 1
        for x in row:
            d = lcm(d, x.denominator)
        out.append([int(x * d) for x in row])
    return out


def _echelon_pivots(M: Sequence[Sequence]) -> dict[int, dict[int, int]]:
    pivots: dict[int, dict[int, int]] = {}
    for row in _integer_rows(M):
        r = {j: x for j, x in enumerate(row) if x}
        while r:
            lead = min(r)
            pr = pivots.get(lead)
            if pr is None:
                pivots[lead] = r
                break
            p, a = pr[lead], r[lead]
            new = {j: p * x for j, x in r.items()}
            for j, x in pr.items():
                v = new.get(j, 0) - a * x
                if v:
                    new[j] = v
                else:
                    new.pop(j, None)
            g = 0
            for x in new.values():
                g = gcd(g, x)
                if g == 1:
                    break
            r = {j: x // g for j, x in new.items()} if g > 1 else new
    return pivots


def row_basis(M: Sequence[Sequence]) -> list[list[int]]:
    """Integer rows in echelon form spanning the row space of ``M``."""
    if not M:
        return []
    n = len(M[0])
    piv = _echelon_pivots(M)
    return [[piv[c].get(j, 0) for j in range(n)] for c in sorted(piv)]


def exact_rank(M: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free elimination on sparse integer rows.

    Each row is scaled to integers once; eliminations use
    ``row <- p*row - a*pivot_row`` followed by division by the row content,
    so no fractions ever appear.
    """
    return len(_echelon_pivots(M))


def determinant(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant of a square rational matrix (Bareiss)."""
    n = len(M)
    if n == 0:
        return Fraction(1)
    rows = [[Fraction(x) for x in row] for row in M]
    scale = Fraction(1)
    A = []
    for row in rows:
        d = 1
        for x in row:
            d = lcm(d, x.denominator)
        scale /= d
        A.append([int(x * d) for x in row])
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            sw = next((r for r in range(k + 1, n) if A[r][k]), None)
            if sw is None:
                return Fraction(0)
            A[k], A[sw] = A[sw], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * scale * A[n - 1][n - 1]


def rref(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    if not M:
        return [], []
    ncols = len(M[0])
    A = [[Fraction(x) for x in row] for row in row_basis(M)]
    nrows = len(A)
    if not A:
        return [], []
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = 1 / A[r][c]
        A[r] = [x * inv for x in A[r]]
        for i in range(nrows):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [a - f * b if b else a for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A[:r], pivots


def nullspace(M: Sequence[Sequence], ncols: int | None = None) -> list[list[Fraction]]:
    """Kernel basis read off the reduced echelon form, one vector per free column."""
    if ncols is None:
        ncols = len(M[0])
    R, pivots = rref(M) if M else ([], [])
    pivset = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for row, pc in zip(R, pivots):
            v[pc] = -row[free]
        basis.append(v)
    return basis


def solve(A: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Unique solution of ``A x = b``; None when inconsistent or not unique."""
    n = len(A[0])
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, pivots = rref(aug)
    if n in pivots or len(pivots) < n:
        return None
    return [R[i][n] for i in range(n)]


def primitive(v: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers (sign preserved)."""
    v = [Fraction(x) for x in v]
    d = 1
    for x in v:
        d = lcm(d, x.denominator)
    ints = [int(x * d) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)
