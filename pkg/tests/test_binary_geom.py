from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtdgeom import binary_geom as bg
from mtdgeom.algebra.lp import feasible
from mtdgeom.model import ModelShape, MTDParams, ProbTensor, parametrize, sample_params

F = Fraction


def test_linear_constraints_l1():
    A, b = bg.constraint_matrix(1)
    chart = bg.affine_chart(1)
    assert chart.dim == 2
    for v in bg.cross_polytope(1).vertices:
        p11, p12, p21, p22 = v
        assert p11 + p12 == p21 + p22 == F(1, 2)


@pytest.mark.parametrize("l", range(1, 7))
def test_chart_dimension_and_round_trip(l):
    chart = bg.affine_chart(l)
    assert chart.dim == l + 1
    assert chart.origin == tuple([F(1, 2 ** (l + 1))] * 2 ** (l + 1))
    for v in bg.cross_polytope(l).vertices:
        assert tuple(chart.to_ambient(chart.to_chart(v))) == v


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
def test_model_points_satisfy_constraints(l, seed):
    shape = ModelShape(l, 2)
    p = parametrize(shape, sample_params(shape, seed))
    assert bg.satisfies_constraints(l, p.values)


def test_l1_square():
    h = F(1, 2)
    C = bg.cross_polytope(1)
    assert set(C.vertices) == {(h, 0, h, 0), (h, 0, 0, h), (0, h, h, 0), (0, h, 0, h)}
    T1, T2 = bg.model_simplices(1)
    assert set(T1.vertices) & set(T2.vertices) == {C.u1, C.u2}
    assert bg.volume_ratio(1) == 1


def test_l2_octahedron():
    C = bg.cross_polytope(2)
    assert len(C.vertices) == 6
    q = F(1, 4)
    assert C.u1 == (q, 0, q, 0, q, 0, q, 0) and C.u2 == (0, q, 0, q, 0, q, 0, q)
    imgs = set()
    for a, b, lam in product((0, 1), repeat=3):
        theta = MTDParams.exact([[a, 1 - a], [b, 1 - b]], [1 - lam, lam])
        imgs.add(parametrize(ModelShape(2, 2), theta).values)
    assert imgs == set(C.vertices)


@pytest.mark.parametrize("l", range(1, 5))
def test_vertex_images(l):
    shape = ModelShape(l, 2)
    C = bg.cross_polytope(l)
    for r in range(l):
        lam = [F(int(k == r)) for k in range(l)]
        assert parametrize(shape, MTDParams.exact([[1, 0], [0, 1]], lam)).values == C.E[r][0]
        assert parametrize(shape, MTDParams.exact([[0, 1], [1, 0]], lam)).values == C.E[r][1]
    assert parametrize(shape, MTDParams.exact([[1, 0], [1, 0]], [F(1, l)] * l)).values == C.u1
    assert parametrize(shape, MTDParams.exact([[0, 1], [0, 1]], [F(1, l)] * l)).values == C.u2


@pytest.mark.parametrize("l", range(1, 7))
def test_symmetry_and_midpoints(l):
    C = bg.cross_polytope(l)
    n = 2 ** (l + 1)
    unif = F(1, n)
    for r in range(l):
        assert all(x + y == 2 * unif for x, y in zip(*C.E[r]))
    assert {tuple(2 * unif - x for x in v) for v in C.vertices} == set(C.vertices)
    for v in C.vertices:
        assert min(v) >= 0 and bg.satisfies_constraints(l, v)


@pytest.mark.parametrize("l", range(1, 7))
def test_volume_ratio(l):
    assert bg.volume_ratio(l) * 2 ** (l - 1) == 1


def test_triangulation_simplices_have_equal_volume():
    vols = {bg.simplex_volume(T) for T in bg.triangulation(5)}
    assert len(bg.triangulation(5)) == 32 and len(vols) == 1


@pytest.mark.parametrize("l", [1, 2, 3])
def test_simplex_intersection_is_the_diagonal(l):
    # points with nonnegative barycentric coordinates in both simplices: only those on S
    T1, T2 = bg.model_simplices(l)
    chart = bg.affine_chart(l)
    X1 = [chart.to_chart(v) for v in T1.vertices]
    X2 = [chart.to_chart(v) for v in T2.vertices]
    k = len(X1)
    d = chart.dim
    # unknowns: a (k), b (k); sum a = sum b = 1; X1 a = X2 b; a, b >= 0
    A_eq = [[X1[j][i] for j in range(k)] + [-X2[j][i] for j in range(k)] for i in range(d)]
    A_eq += [[1] * k + [0] * k, [0] * k + [1] * k]
    b_eq = [0] * d + [1, 1]
    A_ub = [[-int(i == j) for j in range(2 * k)] for i in range(2 * k)]
    b_ub = [0] * (2 * k)
    assert feasible(A_ub, b_ub, A_eq, b_eq, n=2 * k)
    for extra in range(2, k):
        # any mass on a non-apex vertex of T1 makes the system infeasible
        row = [0] * (2 * k)
        row[extra] = -1
        assert not feasible(A_ub + [row], b_ub + [-F(1, 1000)], A_eq, b_eq, n=2 * k)


def test_membership_examples():
    l = 2
    shape = ModelShape(l, 2)
    mem = bg.membership(l, [F(1, 8)] * 8)
    assert mem.region == bg.Region.ON_DIAGONAL and mem.barycentric == (F(1, 2), F(1, 2))
    T1, T2 = bg.model_simplices(l)
    C = bg.cross_polytope(l)
    mixed = [(x + y) / 2 for x, y in zip(C.E[0][0], C.E[1][1])]
    assert bg.membership(l, mixed).region == bg.Region.CLOSURE_ONLY
    cen = [sum(v[i] for v in (T1.vertices[2], T2.vertices[2], T1.vertices[0])) / 3 for i in range(8)]
    assert bg.membership(l, cen).region == bg.Region.ON_DIAGONAL
    off = list(cen)
    off[0] += F(1, 1000)
    off[1] -= F(1, 1000)
    assert bg.membership(l, off).region == bg.Region.OUTSIDE_CLOSURE
    p = parametrize(shape, MTDParams.exact([[F(1, 5), F(4, 5)], [F(4, 5), F(1, 5)]], [F(1, 3), F(2, 3)]))
    assert bg.membership(l, p.values).region == bg.Region.IN_SIMPLEX_2


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
def test_membership_side_follows_parameters(l, seed):
    shape = ModelShape(l, 2)
    theta = sample_params(shape, seed)
    a, b = theta.Q[0][0], theta.Q[1][0]
    mem = bg.membership(l, parametrize(shape, theta).values)
    if a > b:
        assert mem.region == bg.Region.IN_SIMPLEX_1
        bary = mem.barycentric
        assert bary[0] == b and bary[1] == 1 - a
        assert list(bary[2:]) == [(a - b) * x for x in theta.lam]
    elif a < b:
        assert mem.region == bg.Region.IN_SIMPLEX_2
    else:
        assert mem.region == bg.Region.ON_DIAGONAL
    real = bg.membership(l, parametrize(shape, theta).array())
    assert real.region == mem.region


def test_membership_real_tolerance():
    l = 2
    p = np.full(8, 1 / 8)
    assert bg.membership(l, p + 1e-12 * np.array([1, -1, 0, 0, 0, 0, 0, 0])).region == bg.Region.ON_DIAGONAL
    assert bg.membership(l, p + 1e-6 * np.array([1, 0, 0, 0, 0, 0, 0, -1])).region == bg.Region.OUTSIDE_CLOSURE


def test_extreme_point_check():
    C = bg.cross_polytope(2)
    pts = C.vertices + [tuple(F(1, 8) for _ in range(8))]
    assert all(bg.is_extreme(pts, i) for i in range(6))
    assert not bg.is_extreme(pts, 6)


def test_chart_transformation_preserves_space():
    chart = bg.affine_chart(2)
    other = chart.transformed([[1, 1, 0], [0, 1, 0], [2, 0, 1]], [F(1, 7), 0, -1])
    for v in bg.cross_polytope(2).vertices:
        assert tuple(other.to_ambient(other.to_chart(v))) == v
    with pytest.raises(ValueError):
        chart.transformed([[1, 1, 0], [1, 1, 0], [0, 0, 1]], [0, 0, 0])
