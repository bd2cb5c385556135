"""Likelihood inference: log-likelihood, EM, concave maximisation over simplices.

EM treats the model as an ``l``-component mixture whose hidden component is
the lag ``j`` that drives the last symbol.  For the binary model the
likelihood is also maximised directly over each of the two model simplices
(and over the cross-polytope), which gives an independent route to every
local maximum EM can reach.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import binary_geom
from .errors import DegenerateDenominator, ShapeError, ZeroMarginal
from .model import (
    CountsTensor,
    ModelShape,
    MTDParams,
    ProbTensor,
    index_arrays,
    parametrize,
    parametrize_array,
)

MONOTONE_SLACK = 1e-12
INIT_FLOOR = 1e-6


@dataclass
class EMOptions:
    max_iter: int = 10000
    loglik_tol: float = 1e-10
    restarts: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.loglik_tol > 0:
            raise ValueError("loglik_tol must be positive")


def log_likelihood(u: CountsTensor, p) -> float:
    """``sum_w u_w log p_w`` with ``0 log 0 = 0``; ``-inf`` if an observed state has ``p_w = 0``."""
    vals = p.array() if isinstance(p, ProbTensor) else np.asarray(p, dtype=float)
    if isinstance(p, ProbTensor) and p.shape != u.shape:
        raise ShapeError("counts and distribution have different shapes")
    terms = []
    for c, v in zip(u.counts, vals):
        if c == 0:
            continue
        if v <= 0:
            return -math.inf
        terms.append(c * math.log(v))
    return math.fsum(terms)


@lru_cache(maxsize=None)
def _lag_indicator(l: int, m: int) -> np.ndarray:
    """``M[s, j, a*m + c] = 1`` iff state ``s`` has symbol ``a`` at lag ``j`` and last symbol ``c``."""
    src, last = index_arrays(l, m)
    S = len(last)
    M = np.zeros((S, l, m * m))
    for s in range(S):
        for j in range(l):
            M[s, j, src[s, j] * m + last[s]] = 1.0
    M.setflags(write=False)
    return M


def _mixture_terms(l, m, Q, lam):
    """``mix[b, s, j] = lam_j * Q[src_j(s), last(s)]`` for batched parameters."""
    src, last = index_arrays(l, m)
    return Q[:, src, last[:, None]] * lam[:, None, :]


def _batch_loglik(u, denom, l, m, observed):
    with np.errstate(divide="ignore"):
        logs = np.log(denom[:, observed] / m ** l)
    return logs @ u[observed]


def _em_update(u, mix, denom, Q, lam, l, m, observed):
    total = u.sum()
    resp = np.zeros_like(mix)
    resp[:, observed, :] = mix[:, observed, :] / denom[:, observed, None]
    W = resp * u[None, :, None]
    new_lam = W.sum(axis=1) / total
    counts = np.einsum("bsj,sjk->bk", W, _lag_indicator(l, m)).reshape(-1, m, m)
    rows = counts.sum(axis=2, keepdims=True)
    new_Q = np.where(rows > 0, counts / np.where(rows > 0, rows, 1.0), Q)
    return new_Q, new_lam


def _check_denominators(denom, observed):
    if np.any(denom[:, observed] <= 0):
        raise DegenerateDenominator("an observed state has zero probability under the current parameters")


def em_step(u: CountsTensor, params: MTDParams) -> MTDParams:
    """One EM iteration (E-step responsibilities over the hidden lag, closed-form M-step)."""
    shape = u.shape
    params.validate(shape)
    l, m = shape.l, shape.m
    Q, lam = params.arrays()
    Q, lam = Q[None].copy(), lam[None].copy()
    ua = u.array()
    observed = ua > 0
    mix = _mixture_terms(l, m, Q, lam)
    denom = mix.sum(axis=2)
    _check_denominators(denom, observed)
    nQ, nlam = _em_update(ua, mix, denom, Q, lam, l, m, observed)
    return MTDParams.real(nQ[0], nlam[0])


@dataclass
class EMResult:
    params: MTDParams
    loglik: float
    iterations: int
    converged: bool
    min_increment: float = math.inf   # most negative per-step change seen (inf if no step)


@dataclass
class _BatchResult:
    Q: np.ndarray
    lam: np.ndarray
    loglik: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    min_increment: float


def em_fit_batch(u: CountsTensor, Q0: np.ndarray, lam0: np.ndarray, opts: EMOptions) -> _BatchResult:
    """Run EM from several starting points at once; each run stops on its own."""
    l, m = u.shape.l, u.shape.m
    ua = u.array()
    if ua.sum() <= 0:
        raise ValueError("counts must have positive total")
    observed = ua > 0
    Q = np.array(Q0, dtype=float, copy=True)
    lam = np.array(lam0, dtype=float, copy=True)
    B = Q.shape[0]
    loglik = np.full(B, -np.inf)
    iterations = np.zeros(B, dtype=int)
    converged = np.zeros(B, dtype=bool)
    active = np.arange(B)
    min_inc = math.inf
    prev_denom = np.ones((B, ua.size))
    for it in range(opts.max_iter + 1):
        if active.size == 0:
            break
        Qa, la = Q[active], lam[active]
        mix = _mixture_terms(l, m, Qa, la)
        denom = mix.sum(axis=2)
        _check_denominators(denom, observed)
        L = _batch_loglik(ua, denom, l, m, observed)
        loglik[active] = L
        if it > 0:
            # sum of u log(ratio) is far more accurate than a difference of two sums
            inc = np.log1p(denom[:, observed] / prev_denom[active][:, observed] - 1.0) @ ua[observed]
            min_inc = min(min_inc, float(inc.min()))
            done = np.abs(inc) < opts.loglik_tol
            converged[active[done]] = True
            keep = ~done
        else:
            keep = np.ones(active.size, dtype=bool)
        prev_denom[active] = denom
        if it == opts.max_iter:
            break
        active, mix, denom = active[keep], mix[keep], denom[keep]
        if active.size == 0:
            break
        nQ, nlam = _em_update(ua, mix, denom, Q[active], lam[active], l, m, observed)
        Q[active], lam[active] = nQ, nlam
        iterations[active] += 1
    return _BatchResult(Q, lam, loglik, iterations, converged, min_inc)


def em_fit(u: CountsTensor, params0: MTDParams, opts: EMOptions | None = None) -> EMResult:
    """Iterate EM until the log-likelihood gain drops below ``opts.loglik_tol``."""
    opts = opts or EMOptions()
    params0.validate(u.shape)
    Q, lam = params0.arrays()
    res = em_fit_batch(u, Q[None], lam[None], opts)
    return EMResult(MTDParams.real(res.Q[0], res.lam[0]), float(res.loglik[0]),
                    int(res.iterations[0]), bool(res.converged[0]), res.min_increment)


def random_inits(shape: ModelShape, count: int, rng: np.random.Generator):
    """Dirichlet-uniform rows and weights, floored at ``1e-6`` and renormalised."""
    Q = rng.dirichlet(np.ones(shape.m), size=(count, shape.m))
    lam = rng.dirichlet(np.ones(shape.l), size=count)
    Q = np.maximum(Q, INIT_FLOOR)
    lam = np.maximum(lam, INIT_FLOOR)
    return Q / Q.sum(axis=2, keepdims=True), lam / lam.sum(axis=1, keepdims=True)


# -- closed-form boundary candidates ---------------------------------------------

def markov_candidate(u: CountsTensor, j: int) -> ProbTensor:
    """Exact MLE of the pure lag-``j`` chain (``lam = e_j``), as a model point."""
    shape = u.shape
    l, m = shape.l, shape.m
    if not 1 <= j <= l:
        raise ValueError(f"lag must lie in 1..{l}")
    pair = [[0] * m for _ in range(m)]
    for s, c in zip(shape.states(), u.counts):
        pair[int(s[j - 1]) - 1][int(s[l]) - 1] += c
    Q = []
    for a, row in enumerate(pair):
        tot = sum(row)
        if tot == 0:
            raise ZeroMarginal(f"symbol {a + 1} never occurs at lag position {j - 1}")
        Q.append([Fraction(c, tot) for c in row])
    lam = [Fraction(int(k == j - 1)) for k in range(l)]
    return parametrize(shape, MTDParams.exact(Q, lam))


# -- concave maximisation over a simplex -----------------------------------------

@dataclass
class SimplexMax:
    point: ProbTensor
    barycentric: np.ndarray
    loglik: float
    kkt_residual: float
    iterations: int


def _vertex_matrix(vertices) -> np.ndarray:
    cols = []
    for v in vertices:
        vals = v.array() if isinstance(v, ProbTensor) else np.array([float(x) for x in v])
        cols.append(vals)
    return np.array(cols).T


def _ll(ua, obs, x):
    with np.errstate(divide="ignore"):
        return float(math.fsum(ua[obs] * np.log(x[obs])))


def _gradient(ua, obs, V, theta):
    x = V @ theta
    return V[obs].T @ (ua[obs] / x[obs])


def _kkt(ua, obs, V, theta, support):
    g = _gradient(ua, obs, V, theta) / ua.sum()
    res = 0.0
    for k in range(len(theta)):
        if k in support:
            res = max(res, abs(g[k] - 1.0))
        else:
            res = max(res, g[k] - 1.0)
    return res, g


def _newton_polish(ua, obs, V, theta, max_rounds=50):
    """Active-set Newton on the face spanned by the current support."""
    K = len(theta)
    theta = theta.copy()
    support = set(int(k) for k in np.flatnonzero(theta > 1e-9))
    theta[[k for k in range(K) if k not in support]] = 0.0
    theta /= theta.sum()
    f = _ll(ua, obs, V @ theta)
    for _ in range(max_rounds):
        for _inner in range(100):
            idx = sorted(support)
            x = V @ theta
            w = ua[obs] / x[obs] ** 2
            Vs = V[obs][:, idx]
            g = Vs.T @ (ua[obs] / x[obs])
            H = -(Vs.T * w) @ Vs
            n = len(idx)
            KKT = np.zeros((n + 1, n + 1))
            KKT[:n, :n] = H
            KKT[:n, n] = 1.0
            KKT[n, :n] = 1.0
            rhs = np.concatenate([-g, [0.0]])
            sol, *_ = np.linalg.lstsq(KKT, rhs, rcond=None)
            d = sol[:n]
            if not np.all(np.isfinite(d)) or np.max(np.abs(d)) < 1e-15:
                break
            # largest feasible step, then backtrack on the objective
            neg = d < 0
            tmax = 1.0
            if np.any(neg):
                tmax = min(1.0, float(np.min(-theta[idx][neg] / d[neg])))
            t = tmax
            improved = False
            while t > 1e-12:
                cand = theta.copy()
                cand[idx] = theta[idx] + t * d
                cand[cand < 0] = 0.0
                cand /= cand.sum()
                fc = _ll(ua, obs, V @ cand)
                if fc >= f - 1e-13 * abs(f):
                    improved = fc > f or t == tmax
                    theta, f = cand, max(f, fc)
                    break
                t /= 2
            if not improved:
                break
            # drop coordinates that hit the boundary
            for k in list(support):
                if theta[k] <= 0.0:
                    support.discard(k)
            if t * np.max(np.abs(d)) < 1e-15:
                break
        res, g = _kkt(ua, obs, V, theta, support)
        outside = [k for k in range(K) if k not in support and g[k] > 1.0 + 1e-12]
        if not outside:
            break
        support.add(max(outside, key=lambda k: g[k]))
    return theta, support


def maximize_over_simplex(u: CountsTensor, vertices, tol: float = 1e-12,
                          max_iter: int = 20000, polish: bool = True) -> SimplexMax:
    """Maximise the log-likelihood over ``conv(vertices)``.

    Multiplicative (fixed-component mixture EM) updates
    ``theta_k <- theta_k * sum_w u_w V_wk / (V theta)_w / |u|`` run until the
    gain falls below ``tol``; an active-set Newton step on the resulting face
    then sharpens the maximiser to machine precision.  Every accepted step
    is monotone in the log-likelihood.
    """
    ua = u.array()
    obs = ua > 0
    total = ua.sum()
    V = _vertex_matrix(vertices)
    K = V.shape[1]
    theta = np.full(K, 1.0 / K)
    f = _ll(ua, obs, V @ theta)
    it = 0
    for it in range(1, max_iter + 1):
        x = V @ theta
        theta = theta * (V[obs].T @ (ua[obs] / x[obs])) / total
        theta /= theta.sum()
        fn = _ll(ua, obs, V @ theta)
        gain = fn - f
        f = fn
        if gain < tol:
            break
    if polish:
        cand, support = _newton_polish(ua, obs, V, theta)
        fc = _ll(ua, obs, V @ cand)
        if fc >= f - 1e-12 * abs(f):
            theta, f = cand, fc
    support = set(int(k) for k in np.flatnonzero(theta > 0))
    res, _ = _kkt(ua, obs, V, theta, support)
    shape = u.shape
    return SimplexMax(ProbTensor(shape, V @ theta), theta, f, res, it)


def maximize_over_polytope(u: CountsTensor) -> tuple[SimplexMax, list[SimplexMax]]:
    """Maximiser ``p*`` of the log-likelihood over the binary cross-polytope.

    Computed as the best of the maxima over the ``2**l`` triangulation simplices.
    """
    if u.shape.m != 2:
        raise ShapeError("the cross-polytope exists only for two symbols")
    pieces = [maximize_over_simplex(u, T) for T in binary_geom.triangulation(u.shape.l)]
    best = max(range(len(pieces)), key=lambda k: (pieces[k].loglik, -k))
    return pieces[best], pieces


# -- local-maxima census -------------------------------------------------------------

@dataclass
class LocalMax:
    point: np.ndarray
    loglik: float
    basin: int
    params: MTDParams
    members: list = field(default_factory=list)


@dataclass
class LocalMaxCensus:
    maxima: list
    cluster_tol: float
    restarts: int
    min_increment: float
    all_converged: bool

    @property
    def count(self) -> int:
        return len(self.maxima)

    def within_binary_bound(self) -> bool:
        return self.count <= 2


def cluster_points(points: np.ndarray, logliks: np.ndarray, tol: float) -> list[list[int]]:
    """Greedy leader clustering in order of decreasing log-likelihood (ties by index)."""
    order = sorted(range(len(points)), key=lambda k: (-logliks[k], k))
    leaders: list[int] = []
    groups: list[list[int]] = []
    for k in order:
        for g, lead in enumerate(leaders):
            if np.max(np.abs(points[k] - points[lead])) < tol:
                groups[g].append(k)
                break
        else:
            leaders.append(k)
            groups.append([k])
    return groups


def census(u: CountsTensor, opts: EMOptions | None = None, cluster_tol: float = 1e-5) -> LocalMaxCensus:
    """Run EM from ``opts.restarts`` random starts and cluster the limits in probability space."""
    opts = opts or EMOptions()
    shape = u.shape
    rng = np.random.default_rng(opts.seed)
    Q0, lam0 = random_inits(shape, opts.restarts, rng)
    res = em_fit_batch(u, Q0, lam0, opts)
    pts = parametrize_array(shape.l, shape.m, res.Q, res.lam)
    groups = cluster_points(pts, res.loglik, cluster_tol)
    maxima = []
    for g in groups:
        lead = g[0]
        maxima.append(LocalMax(pts[lead], float(res.loglik[lead]), len(g),
                               MTDParams.real(res.Q[lead], res.lam[lead]), sorted(g)))
    return LocalMaxCensus(maxima, cluster_tol, opts.restarts, res.min_increment,
                          bool(res.converged.all()))


# -- the binary trichotomy ----------------------------------------------------------

@dataclass
class MLEReport:
    global_point: ProbTensor
    global_loglik: float
    kind: str                      # "PStarInterior" or "BoundaryLocal"
    side: int | None               # side holding the global maximum; None on the shared edge
    pstar: SimplexMax
    simplex_maxima: tuple          # (max over simplex 1, max over simplex 2)
    pstar_membership: binary_geom.Membership

    @property
    def second_local(self) -> SimplexMax | None:
        """Maximum over the simplex not holding the global maximum (``None`` if p* lies on S)."""
        if self.side is None:
            return None
        return self.simplex_maxima[2 - self.side]


def mle_binary(u: CountsTensor) -> MLEReport:
    """Global maximiser of the likelihood over the binary model, with its trichotomy report."""
    shape = u.shape
    if shape.m != 2:
        raise ShapeError("mle_binary needs two symbols")
    pstar, _ = maximize_over_polytope(u)
    T1, T2 = binary_geom.model_simplices(shape.l)
    s1 = maximize_over_simplex(u, T1.vertices)
    s2 = maximize_over_simplex(u, T2.vertices)
    mem = binary_geom.membership(shape.l, pstar.point.values)
    if mem.in_model:
        # side is None when p* lies on the shared edge S
        return MLEReport(pstar.point, pstar.loglik, "PStarInterior", mem.side, pstar, (s1, s2), mem)
    side = 1 if (s1.loglik, 1) >= (s2.loglik, 0) else 2
    best = s1 if side == 1 else s2
    return MLEReport(best.point, best.loglik, "BoundaryLocal", side, pstar, (s1, s2), mem)


# -- rank certificate ---------------------------------------------------------------

CERT_RANK_TOL = 1e-8


def certificate_matrix(u: CountsTensor, p) -> np.ndarray:
    """The 6x8 matrix: ``u``, ``p``, and four rows of ``p`` times constraint gradients."""
    if u.shape != ModelShape(2, 2):
        raise ShapeError("the certificate is defined for the 8-state binary case")
    pv = p.array() if isinstance(p, ProbTensor) else np.asarray(p, dtype=float)
    if pv.shape != (8,):
        raise ShapeError("expected 8 probabilities")
    p111, p112, p121, p122, p211, p212, p221, p222 = pv
    return np.array([
        u.array(),
        pv,
        [p111, p112, -p121, -p122, 0, 0, 0, 0],
        [0, 0, 0, 0, p211, p212, -p221, -p222],
        [0, 0, p121, p122, 0, 0, -p221, -p222],
        [p111, 0, -p121, 0, -p211, 0, p221, 0],
    ], dtype=float)


def rank_certificate(u: CountsTensor, p) -> tuple[np.ndarray, int]:
    """Singular values of the certificate matrix and its rank at relative tolerance ``1e-8``."""
    pv = p.array() if isinstance(p, ProbTensor) else np.asarray(p, dtype=float)
    if np.any(pv <= 0):
        raise ShapeError("p must be strictly positive")
    sv = np.linalg.svd(certificate_matrix(u, pv), compute_uv=False)
    rank = int(np.sum(sv > CERT_RANK_TOL * sv[0]))
    return sv, rank
