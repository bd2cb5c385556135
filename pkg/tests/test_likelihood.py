import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mtdgeom import binary_geom as bg
from mtdgeom import likelihood as lk
from mtdgeom.errors import DegenerateDenominator, ShapeError, ZeroMarginal
from mtdgeom.model import CountsTensor, ModelShape, MTDParams, ProbTensor, parametrize, sample_data, sample_params

F = Fraction
B2 = ModelShape(2, 2)


def balanced_data(shape, seed, n=400):
    return sample_data(shape, sample_params(shape, seed), n, balanced=True, seed=seed)


def ll_params(u, theta):
    return lk.log_likelihood(u, parametrize(u.shape, theta))


# -- log-likelihood -------------------------------------------------------------------------

def test_loglik_uniform():
    shape = ModelShape(2, 3)
    u = balanced_data(shape, 1, n=270)
    p = ProbTensor(shape, [F(1, 27)] * 27)
    assert lk.log_likelihood(u, p) == pytest.approx(-u.total * 3 * math.log(3))


def test_loglik_conventions():
    shape = ModelShape(1, 2)
    u = CountsTensor(shape, [5, 0, 0, 0])
    assert lk.log_likelihood(u, ProbTensor(shape, [F(1, 2), F(1, 2), 0, 0])) == pytest.approx(5 * math.log(0.5))
    assert lk.log_likelihood(u, ProbTensor(shape, [0, F(1, 2), F(1, 2), 0])) == -math.inf


# -- EM -----------------------------------------------------------------------------------------

def test_em_options_validation():
    with pytest.raises(ValueError):
        lk.EMOptions(max_iter=0)
    with pytest.raises(ValueError):
        lk.EMOptions(loglik_tol=0)


@given(st.sampled_from([(2, 2), (3, 2), (2, 3), (3, 3)]), st.integers(0, 10 ** 6))
def test_em_step_never_decreases(lm, seed):
    shape = ModelShape(*lm)
    u = sample_data(shape, sample_params(shape, seed), 10 * shape.m ** shape.l, balanced=True, seed=seed)
    rng = np.random.default_rng(seed)
    Q, lam = lk.random_inits(shape, 1, rng)
    theta = MTDParams.real(Q[0], lam[0])
    before = ll_params(u, theta)
    for _ in range(5):
        theta = lk.em_step(u, theta)
        after = ll_params(u, theta)
        assert after >= before - 1e-12
        before = after


def test_em_step_fixed_point():
    u = balanced_data(B2, 4)
    for j in (1, 2):
        cand = lk.markov_candidate(u, j)
        lam = [float(k == j - 1) for k in range(2)]
        # recover the lag-j transition matrix from the candidate
        Q = np.zeros((2, 2))
        for s, v in zip(B2.states(), cand.values):
            Q[int(s[j - 1]) - 1, int(s[2]) - 1] = float(v) * 4
        theta = MTDParams.real(Q, lam)
        nxt = lk.em_step(u, theta)
        Q1, lam1 = nxt.arrays()
        assert np.allclose(Q1, Q, atol=1e-12) and np.allclose(lam1, lam, atol=1e-12)


def test_em_zero_locking():
    u = balanced_data(ModelShape(3, 2), 2)
    theta = MTDParams.real([[0.3, 0.7], [0.6, 0.4]], [0.0, 1.0, 0.0])
    res = lk.em_fit(u, theta, lk.EMOptions(max_iter=2000))
    assert list(res.params.lam) == [0.0, 1.0, 0.0]
    cand = lk.markov_candidate(u, 2)
    assert np.allclose(parametrize(u.shape, res.params).array(), cand.array(), atol=1e-9)


def test_em_scale_invariance():
    u = balanced_data(B2, 6)
    theta = MTDParams.real([[0.3, 0.7], [0.6, 0.4]], [0.4, 0.6])
    r1 = lk.em_fit(u, theta, lk.EMOptions(max_iter=200))
    r2 = lk.em_fit(u.scaled(2), theta, lk.EMOptions(max_iter=200))
    assert np.allclose(r1.params.arrays()[0], r2.params.arrays()[0], atol=1e-12)
    assert r1.iterations == r2.iterations


def test_em_deterministic():
    u = balanced_data(B2, 7)
    theta = MTDParams.real([[0.3, 0.7], [0.6, 0.4]], [0.4, 0.6])
    a, b = lk.em_fit(u, theta), lk.em_fit(u, theta)
    assert a.loglik == b.loglik and a.iterations == b.iterations


def test_em_degenerate_denominator():
    shape = ModelShape(1, 2)
    u = CountsTensor(shape, [1, 1, 1, 1])
    with pytest.raises(DegenerateDenominator):
        lk.em_step(u, MTDParams.real([[1.0, 0.0], [0.5, 0.5]], [1.0]))


def test_em_consistency_large_sample():
    shape = ModelShape(2, 2)
    truth = MTDParams.exact([[F(4, 5), F(1, 5)], [F(1, 5), F(4, 5)]], [F(1, 3), F(2, 3)])
    u = sample_data(shape, truth, 10 ** 5, balanced=True, seed=11)
    start = MTDParams.real([[0.6, 0.4], [0.4, 0.6]], [0.5, 0.5])
    res = lk.em_fit(u, start, lk.EMOptions(loglik_tol=1e-12, max_iter=100000))
    assert res.loglik >= ll_params(u, truth) - 1e-6
    assert bg.membership(2, parametrize(shape, res.params).array()).region == bg.Region.IN_SIMPLEX_1


def test_em_reaches_side_one_from_side_one_starts():
    shape = ModelShape(2, 2)
    truth = MTDParams.exact([[F(7, 10), F(3, 10)], [F(1, 5), F(4, 5)]], [F(1, 2), F(1, 2)])
    u = sample_data(shape, truth, 20000, balanced=True, seed=3)
    rng = np.random.default_rng(0)
    for _ in range(5):
        a, b = sorted(rng.uniform(0.05, 0.95, size=2))[::-1]
        lam = rng.dirichlet([1, 1])
        res = lk.em_fit(u, MTDParams.real([[a, 1 - a], [b, 1 - b]], lam), lk.EMOptions(loglik_tol=1e-12))
        assert bg.membership(2, parametrize(shape, res.params).array()).region == bg.Region.IN_SIMPLEX_1


# -- closed-form candidates ---------------------------------------------------------------------

def test_markov_candidate_printed_formulas():
    u = balanced_data(B2, 12)
    n = u.total
    p1 = lk.markov_candidate(u, 2)
    p2 = lk.markov_candidate(u, 1)
    for s in B2.states():
        i0, i1, i2 = s
        assert p1[s] == F(u["1" + i1 + i2] + u["2" + i1 + i2], 2 * n)
        assert p2[s] == F(u[i0 + "1" + i2] + u[i0 + "2" + i2], 2 * n)


def test_markov_candidate_reproduces_deterministic_chain():
    shape = ModelShape(3, 2)
    theta = MTDParams.exact([[0, 1], [1, 0]], [0, 0, 1])
    u = sample_data(shape, theta, 800, balanced=True, seed=0)
    cand = lk.markov_candidate(u, 3)
    assert cand == parametrize(shape, theta)


@pytest.mark.parametrize("seed", range(5))
def test_markov_candidate_lies_on_model_boundary(seed):
    u = balanced_data(ModelShape(3, 2), seed)
    for j in (1, 2, 3):
        mem = bg.membership(3, lk.markov_candidate(u, j).values)
        assert mem.in_model
        assert mem.region == bg.Region.ON_DIAGONAL or min(mem.barycentric) == 0


def test_markov_candidate_zero_marginal():
    shape = ModelShape(2, 2)
    u = CountsTensor(shape, [3, 1, 2, 2, 0, 0, 0, 0])
    with pytest.raises(ZeroMarginal):
        lk.markov_candidate(u, 1)
    with pytest.raises(ValueError):
        lk.markov_candidate(u, 3)


# -- concave maximisation -------------------------------------------------------------------------

def newton_oracle(u, l):
    """Maximise the log-likelihood over the chart by damped Newton steps from the uniform point."""
    chart = bg.affine_chart(l)
    o, B = chart.matrix_real()
    ua = u.array()
    x = np.zeros(B.shape[1])
    f = lambda y: float(ua @ np.log(o + B @ y))  # noqa: E731
    for _ in range(200):
        p = o + B @ x
        g = B.T @ (ua / p)
        H = -(B.T * (ua / p ** 2)) @ B
        d = np.linalg.solve(H, -g)
        t = 1.0
        while np.min(o + B @ (x + t * d)) <= 0 or f(x + t * d) < f(x):
            t /= 2
        x = x + t * d
        if np.max(np.abs(t * d)) < 1e-15:
            break
    return o + B @ x


@pytest.mark.parametrize("l,seed", [(1, 0), (2, 1), (2, 2), (3, 3)])
def test_polytope_maximiser_matches_newton_oracle(l, seed):
    rng = np.random.default_rng(seed)
    u = CountsTensor(ModelShape(l, 2), rng.integers(1, 60, size=2 ** (l + 1)).tolist())
    best, pieces = lk.maximize_over_polytope(u)
    assert np.max(np.abs(best.point.array() - newton_oracle(u, l))) < 1e-6
    assert best.kkt_residual < 1e-8
    # simplices containing p* agree on it
    for piece in pieces:
        assert piece.loglik <= best.loglik + 1e-9


def test_simplex_maximiser_vertex_optimum():
    T1, _ = bg.model_simplices(2)
    V = T1.vertices
    u = CountsTensor(B2, [int(8 * x) for x in V[2]])      # proportional to a vertex with partial support
    res = lk.maximize_over_simplex(u, V)
    assert res.barycentric[2] == pytest.approx(1.0, abs=1e-9)


def test_simplex_maximiser_scale_invariance():
    u = balanced_data(B2, 5)
    T1, _ = bg.model_simplices(2)
    a = lk.maximize_over_simplex(u, T1.vertices)
    b = lk.maximize_over_simplex(u.scaled(2), T1.vertices)
    assert np.max(np.abs(a.point.array() - b.point.array())) < 1e-9


@given(st.integers(0, 10 ** 6))
def test_simplex_maximiser_kkt(seed):
    rng = np.random.default_rng(seed)
    u = CountsTensor(B2, rng.integers(0, 40, size=8).tolist() if seed % 3 else rng.integers(1, 40, size=8).tolist())
    if u.total == 0:
        return
    for T in bg.model_simplices(2):
        res = lk.maximize_over_simplex(u, T.vertices)
        assert res.kkt_residual < 1e-7
        assert abs(res.barycentric.sum() - 1) < 1e-12 and res.barycentric.min() >= 0


# -- MLE trichotomy ------------------------------------------------------------------------------------

def test_mle_interior_truth():
    truth = MTDParams.exact([[F(7, 10), F(3, 10)], [F(1, 5), F(4, 5)]], [F(2, 5), F(3, 5)])
    u = sample_data(B2, truth, 10 ** 5, balanced=True, seed=1)
    rep = lk.mle_binary(u)
    assert rep.kind == "PStarInterior" and rep.side == 1
    assert 0.5 * np.abs(rep.global_point.array() - parametrize(B2, truth).array()).sum() < 0.02


def test_mle_uniform_counts():
    u = CountsTensor(B2, [10] * 8)
    rep = lk.mle_binary(u)
    assert rep.pstar_membership.region == bg.Region.ON_DIAGONAL
    assert rep.kind == "PStarInterior" and rep.side is None and rep.second_local is None
    assert rep.global_loglik == pytest.approx(80 * math.log(1 / 8))


@pytest.mark.parametrize("seed", [1, 4, 5, 10])
def test_mle_outside_model(seed):
    u = balanced_data(B2, seed)
    rep = lk.mle_binary(u)
    assert rep.kind == "BoundaryLocal"
    s1, s2 = rep.simplex_maxima
    assert rep.global_loglik == max(s1.loglik, s2.loglik)
    for s in (s1, s2):
        assert s.barycentric.min() < 1e-9


def test_mle_scale_invariance():
    u = balanced_data(B2, 8)
    a, b = lk.mle_binary(u), lk.mle_binary(u.scaled(3))
    assert a.kind == b.kind and a.side == b.side
    assert np.max(np.abs(a.global_point.array() - b.global_point.array())) < 1e-9


def test_mle_requires_binary():
    with pytest.raises(ShapeError):
        lk.mle_binary(balanced_data(ModelShape(1, 3), 0, n=90))


# -- census -----------------------------------------------------------------------------------------------

def test_census_on_diagonal_data():
    theta = MTDParams.exact([[F(3, 10), F(7, 10)], [F(3, 10), F(7, 10)]], [F(1, 2), F(1, 2)])
    u = CountsTensor(B2, [int(400 * x) for x in parametrize(B2, theta).values])
    c = lk.census(u, lk.EMOptions(restarts=30, seed=2, loglik_tol=1e-13, max_iter=100000))
    assert c.count == 1


@pytest.mark.parametrize("seed", [0, 1, 5])
def test_census_invariants(seed):
    u = balanced_data(B2, seed)
    c = lk.census(u, lk.EMOptions(restarts=40, seed=seed, loglik_tol=1e-13, max_iter=100000))
    assert sum(mx.basin for mx in c.maxima) == 40
    for i, a in enumerate(c.maxima):
        for b in c.maxima[i + 1:]:
            assert np.max(np.abs(a.point - b.point)) >= c.cluster_tol
    assert c.within_binary_bound()
    assert c.min_increment >= -1e-12
    rep = lk.mle_binary(u)
    for mx in c.maxima:
        assert min(np.max(np.abs(mx.point - s.point.array())) for s in rep.simplex_maxima) < 1e-5
    scaled = lk.census(u.scaled(2), lk.EMOptions(restarts=40, seed=seed, loglik_tol=1e-13, max_iter=100000))
    assert [mx.basin for mx in scaled.maxima] == [mx.basin for mx in c.maxima]


def test_cluster_points():
    pts = np.array([[0.0, 0.0], [0.0, 1e-7], [1.0, 1.0], [1.0, 1.0 + 2e-5]])
    groups = lk.cluster_points(pts, np.array([0.0, 1.0, -1.0, -2.0]), 1e-5)
    assert groups == [[1, 0], [2], [3]]


# -- certificate ------------------------------------------------------------------------------------------

def test_certificate_parallel_rows():
    p = parametrize(B2, MTDParams.exact([[F(1, 3), F(2, 3)], [F(3, 4), F(1, 4)]], [F(1, 5), F(4, 5)]))
    u = CountsTensor(B2, [int(x * 9600) for x in p.values])
    sv, rank = lk.rank_certificate(u, p)
    assert rank <= 5 and sv[-1] / sv[0] < 1e-12


def test_certificate_shape_errors():
    u = balanced_data(ModelShape(3, 2), 0)
    with pytest.raises(ShapeError):
        lk.rank_certificate(u, parametrize(u.shape, sample_params(u.shape, 0)))
    u2 = balanced_data(B2, 0)
    with pytest.raises(ShapeError):
        lk.rank_certificate(u2, ProbTensor(B2, [F(1, 4), 0, F(1, 4), 0, F(1, 4), 0, F(1, 4), 0]))
