import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from mtdgeom import arrangement as ar
from mtdgeom import binary_geom as bg
from mtdgeom.algebra.linalg import solve

F = Fraction

CHI = {
    1: [4, -4, 1],
    2: [-26, 24, -8, 1],
    3: [488, -376, 112, -16, 1],
    4: [-27594, 16240, -3880, 480, -32, 1],
}


def points_off_planes(A, q):
    """Count points of F_q^d avoiding every hyperplane (equals chi(q) for primes of good reduction)."""
    grid = np.stack(np.meshgrid(*[np.arange(q)] * A.dim, indexing="ij"), axis=-1).reshape(-1, A.dim)
    keep = np.ones(len(grid), dtype=bool)
    for h in A.hyperplanes:
        keep &= (grid @ np.array(h.a, dtype=np.int64) - h.b) % q != 0
    return int(keep.sum())


def chart_with_coordinates(l, states):
    """A chart of the span whose coordinates are the listed ambient coordinates."""
    base = bg.affine_chart(l)
    idx = [bg._shape(l).states().index(s) for s in states]
    CB = [[v[i] for v in base.basis] for i in idx]          # square, rows = selected coordinates
    c0 = [base.origin[i] for i in idx]
    cols = [solve(CB, [F(int(r == k)) for r in range(len(idx))]) for k in range(len(idx))]
    M = [list(r) for r in zip(*cols)]                         # M = CB^{-1}
    T = [list(r) for r in zip(*M)]
    shift = [-sum((M[j][k] * c0[k] for k in range(len(idx))), F(0)) for j in range(len(idx))]
    return base.transformed(T, shift)


def plane_set(A):
    return {(h.a, h.b) for h in A.hyperplanes}


def planes(dim, rows):
    return {ar._normalize(a, b) for a, b in rows}


# -- construction --------------------------------------------------------------------------

def test_l1_lines():
    A = ar.build_arrangement(1, chart_with_coordinates(1, ["11", "21"]))
    assert plane_set(A) == planes(2, [([1, 0], 0), ([1, 0], F(1, 2)), ([0, 1], 0), ([0, 1], F(1, 2))])


def test_l2_planes_in_coordinate_chart():
    A = ar.build_arrangement(2, chart_with_coordinates(2, ["111", "121", "211"]))
    forms = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 1, 1]]
    want = planes(3, [(f, b) for f in forms for b in (0, F(1, 4))])
    assert plane_set(A) == want


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_distinct_and_essential(l):
    A = ar.build_arrangement(l)
    assert A.size == 2 ** (l + 1) and not A.dropped
    assert A.dim == l + 1 and A.is_essential()


def test_normalize():
    assert ar._normalize([F(-1, 2), 1], F(1, 4)) == ((2, -4), -1)
    assert ar._normalize([0, 0], 1) is None


def test_coincident_planes_merge():
    A = ar.make_arrangement(2, [([1, 0], 1, "a"), ([2, 0], 2, "b"), ([0, 1], 0, "c")])
    assert A.size == 2 and A.hyperplanes[0].label == "a=b"


# -- characteristic polynomial --------------------------------------------------------------

def test_chi_small_examples():
    assert ar.characteristic_polynomial(ar.make_arrangement(2, [([1, 1], 3, "h")])) == [0, -1, 1]
    assert ar.characteristic_polynomial(ar.make_arrangement(3, [])) == [0, 0, 0, 1]
    # three generic lines: t^2 - 3t + 3, seven regions, one bounded
    A = ar.make_arrangement(2, [([1, 0], 0, "x"), ([0, 1], 0, "y"), ([1, 1], 1, "z")])
    chi = ar.characteristic_polynomial(A)
    assert chi == [3, -3, 1]
    assert ar.region_counts(A, chi) == (7, 1)


def test_chi_central_arrangement_has_no_bounded_regions():
    A = ar.make_arrangement(2, [([1, 0], 0, "x"), ([0, 1], 0, "y"), ([1, 1], 0, "z")])
    assert ar.characteristic_polynomial(A) == [2, -3, 1]
    assert ar.region_counts(A) == (6, 0)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_chi_table(l):
    assert ar.characteristic_polynomial(ar.build_arrangement(l)) == CHI[l]


@pytest.mark.slow
def test_chi_l4():
    A = ar.build_arrangement(4)
    chi = ar.characteristic_polynomial(A)
    assert chi == CHI[4]
    assert ar.region_counts(A, chi) == (48227, 14785)


@pytest.mark.parametrize("l,primes", [(1, [101, 103]), (2, [101, 103]), (3, [31, 37])])
def test_chi_matches_finite_field_count(l, primes):
    A = ar.build_arrangement(l)
    for q in primes:
        assert points_off_planes(A, q) == ar.eval_poly(CHI[l], q)


@pytest.mark.parametrize("l", [1, 2, 3])
def test_deletion_restriction(l):
    A = ar.build_arrangement(l)
    for i in range(A.size):
        lhs = ar.characteristic_polynomial(A)
        d = ar.characteristic_polynomial(ar.deletion(A, i))
        r = ar.characteristic_polynomial(ar.restriction(A, i)) + [0]
        assert lhs == [x - y for x, y in zip(d, r)]


def test_moebius_of_bottom_and_atoms():
    A = ar.build_arrangement(2)
    P = ar.flats(A)
    mu = ar.moebius(P)
    assert mu[0] == 1 and P[0].dim == A.dim
    atoms = [m for m, fl in P.items() if fl.dim == A.dim - 1]
    assert len(atoms) == A.size and all(mu[m] == -1 for m in atoms)


def test_flats_points_lie_on_their_planes():
    A = ar.build_arrangement(3)
    for mask, fl in ar.flats(A).items():
        if fl.dim == 0:
            x = fl.point
            on = {i for i, h in enumerate(A.hyperplanes) if h.value(x) == 0}
            assert on == {i for i in range(A.size) if mask >> i & 1}


# -- region counts -----------------------------------------------------------------------------

@pytest.mark.parametrize("l,bounded", [(1, 1), (2, 9), (3, 209)])
def test_ml_degree(l, bounded):
    assert ar.ml_degree(l) == bounded


@pytest.mark.parametrize("l", [1, 2])
def test_direct_enumeration_agrees(l):
    A = ar.build_arrangement(l)
    assert ar.bounded_regions_direct(A) == ar.region_counts(A)


def test_direct_enumeration_random_arrangements():
    rng = random.Random(3)
    for _ in range(6):
        rows = [([rng.randint(-3, 3) for _ in range(2)], rng.randint(-3, 3), str(k)) for k in range(5)]
        A = ar.make_arrangement(2, rows)
        assert ar.bounded_regions_direct(A) == ar.region_counts(A)


def test_bounded_regions_cross_checks():
    A = ar.build_arrangement(2)
    assert ar.bounded_regions(A, cross_check=True) == 9


def test_region_sign_vectors_are_distinct_and_realised():
    A = ar.build_arrangement(1)
    regions = ar.enumerate_regions(A)
    assert len(set(regions)) == len(regions) == 9
    for sig in regions:
        assert len(sig) == A.size


@pytest.mark.parametrize("l", [1, 2, 3])
def test_chart_invariance(l):
    rng = random.Random(l)
    d = l + 1
    while True:
        T = [[F(rng.randint(-2, 2)) for _ in range(d)] for _ in range(d)]
        try:
            chart = bg.affine_chart(l).transformed(T, [F(rng.randint(-3, 3), 4) for _ in range(d)])
            break
        except ValueError:
            continue
    A = ar.build_arrangement(l, chart)
    assert ar.characteristic_polynomial(A) == CHI[l]
    assert ar.bounded_regions(A, cross_check=l <= 2) == [1, 9, 209][l - 1]


def test_ml_degree_table_alignment():
    table = ar.ml_degree_table(3)
    assert table == {1: 1, 2: 9, 3: 209}
    pairs = list(zip(list(table.values()), list(table.values())[1:]))
    assert (9, 209) in pairs
