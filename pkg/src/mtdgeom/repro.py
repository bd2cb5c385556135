"""Acceptance checks: one function per numbered claim, plus a table formatter.

Each check returns a :class:`CriterionResult`.  The likelihood checks (7, 8
and 11) share one batch of seeded datasets, computed once per process.
"""
from __future__ import annotations

import contextlib
import io
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from . import arrangement, binary_geom, ideal, likelihood
from .algebra import parse_polynomial
from .errors import NonIdentifiable
from .model import CountsTensor, ModelShape, MTDParams, ProbTensor, invert, parametrize, sample_data, sample_params

GRID = [(l, m) for l in range(1, 5) for m in range(2, 5)]

# generators for (l, m) = (2, 3); the first term of each form is its designated leading term
GOLDEN_23 = {
    "linear1": [
        "p_111 - p_311 - p_131 + p_331", "p_121 - p_321 - p_131 + p_331",
        "p_211 - p_311 - p_231 + p_331", "p_221 - p_321 - p_231 + p_331",
        "p_112 - p_312 - p_132 + p_332", "p_122 - p_322 - p_132 + p_332",
        "p_212 - p_312 - p_232 + p_332", "p_222 - p_322 - p_232 + p_332",
        "p_113 - p_313 - p_133 + p_333", "p_123 - p_323 - p_133 + p_333",
        "p_213 - p_313 - p_233 + p_333", "p_223 - p_323 - p_233 + p_333",
    ],
    "linear2": [
        "p_311 + p_312 + p_313 - p_331 - p_332 - p_333",
        "p_321 + p_322 + p_323 - p_331 - p_332 - p_333",
        "p_131 + p_132 + p_133 - p_331 - p_332 - p_333",
        "p_231 + p_232 + p_233 - p_331 - p_332 - p_333",
    ],
    "matrixA": [
        ["p_132 - p_332", "p_232 - p_332", "p_133 - p_333", "p_233 - p_333"],
        ["p_312 - p_332", "p_322 - p_332", "p_313 - p_333", "p_323 - p_333"],
    ],
}

EM_SEEDS = 100
EM_RESTARTS = 100
EM_N = 400
EM_LAGS = (2, 3)
# EM stalls near the shared edge; these settings let restarts reach 1e-5 agreement
EM_STUDY_OPTIONS = dict(loglik_tol=1e-13, max_iter=100000)
MATCH_TOL = 1e-5


@dataclass
class CriterionResult:
    number: int
    claim: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.claim} ({self.seconds:.1f}s): {self.detail}"


def _timed(number, claim, fn):
    t0 = time.perf_counter()
    passed, detail, data = fn()
    return CriterionResult(number, claim, bool(passed), detail, time.perf_counter() - t0, data)


# -- 1 ------------------------------------------------------------------------------------

def parse_ideal_text(text: str) -> dict:
    """Split ``generate-ideal`` text output back into its four families."""
    sections: dict[str, list[str]] = {}
    key = None
    names = {"first family": "linear1", "second family": "linear2", "matrix A": "matrixA", "minors": "minors"}
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key = next((v for k, v in names.items() if k in line), None)
            sections.setdefault(key, [])
            continue
        sections[key].append(line)
    out = {
        "linear1": [parse_polynomial(s) for s in sections.get("linear1", [])],
        "linear2": [parse_polynomial(s) for s in sections.get("linear2", [])],
        "matrixA": [[parse_polynomial(e) for e in row.split(" ; ")] for row in sections.get("matrixA", [])],
        "minors": [parse_polynomial(s) for s in sections.get("minors", [])],
    }
    return out


def golden_comparison(text: str) -> list[str]:
    """Structural differences between ``generate-ideal --l 2 --m 3`` text and the golden data."""
    got = parse_ideal_text(text)
    problems = []
    order = ideal.DEFAULT_ORDER
    for fam in ("linear1", "linear2"):
        gold = [parse_polynomial(s) for s in GOLDEN_23[fam]]
        if len(got[fam]) != len(gold) or set(got[fam]) != set(gold):
            problems.append(f"{fam} differs")
        gold_leads = {parse_polynomial(s.split(" ")[0]).leading_monomial(order) for s in GOLDEN_23[fam]}
        if {f.leading_monomial(order) for f in got[fam]} != gold_leads:
            problems.append(f"{fam} leading terms differ")
    gA = [[parse_polynomial(e) for e in row] for row in GOLDEN_23["matrixA"]]
    if got["matrixA"] != gA:
        problems.append("matrix A differs")
    gold_minors = set()
    for a in range(4):
        for b in range(a + 1, 4):
            gold_minors.add(gA[0][a] * gA[1][b] - gA[0][b] * gA[1][a])
    if len(got["minors"]) != 6 or set(got["minors"]) != gold_minors:
        problems.append("minors differ")
    for f in got["minors"]:
        lead = f.leading_monomial(order)
        diag = {(gA[0][a] * gA[1][b]).leading_monomial(order) for a in range(4) for b in range(a + 1, 4)}
        if lead not in diag:
            problems.append(f"minor {f} does not lead with a diagonal product")
    return problems


def criterion_1():
    from . import cli
    buf = io.StringIO()
    t0 = time.perf_counter()
    with contextlib.redirect_stdout(buf):
        code = cli.run(["generate-ideal", "--l", "2", "--m", "3", "--format", "text"])
    elapsed = time.perf_counter() - t0
    problems = golden_comparison(buf.getvalue())
    ok = code == 0 and not problems and elapsed < 1.0
    detail = "12+4 linear forms, 2x4 matrix A and 6 minors match" if not problems else "; ".join(problems)
    return ok, f"{detail}; generate-ideal took {elapsed:.2f}s", {"elapsed": elapsed}


# -- 2, 3, 4 ------------------------------------------------------------------------------

def criterion_2():
    t0 = time.perf_counter()
    bad = []
    for l, m in GRID:
        shape = ModelShape(l, m)
        gs = ideal.full_basis(shape)
        if not (ideal.verify_vanishing(shape) and ideal.verify_groebner(shape) and ideal.leading_terms_match(gs)):
            bad.append((l, m))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 300
    return ok, f"{len(GRID) - len(bad)}/{len(GRID)} shapes verified in {elapsed:.1f}s" + (f"; failing {bad}" if bad else ""), {}


def criterion_3():
    bad = []
    for l, m in GRID:
        got = ideal.variety_dim_degree(ModelShape(l, m))
        want = ((m - 1) * m + l - 1, comb(l + (m - 1) ** 2 - 2, l - 1))
        if got != want:
            bad.append(((l, m), got, want))
    s23 = ModelShape(2, 3)
    dim23, deg23 = ideal.variety_dim_degree(s23)
    codim = ideal.span_dimension(s23) - dim23
    ok = not bad and codim == 3 and deg23 == 4
    return ok, f"grid matches; (2,3): codimension {codim}, degree {deg23} in the span" if not bad else f"mismatches {bad}", {}


def criterion_4():
    bad = []
    for l, m in GRID:
        got = ideal.span_dimension(ModelShape(l, m))
        if got != (m - 1) * (l * m - l + 1):
            bad.append(((l, m), got))
    binary = all(ideal.span_dimension(ModelShape(l, 2)) == l + 1 for l in range(1, 5))
    return not bad and binary, "span dimension formula holds on the grid" if not bad else f"mismatches {bad}", {}


# -- 5 --------------------------------------------------------------------------------------

def _phi22(a, b, lam):
    """The displayed l = m = 2 parametrisation, in state order 111, 112, ..., 222."""
    q = Fraction(1, 4)
    return (q * a, q * (1 - a),
            q * (lam * b + (1 - lam) * a), q * (lam * (1 - b) + (1 - lam) * (1 - a)),
            q * (lam * a + (1 - lam) * b), q * (lam * (1 - a) + (1 - lam) * (1 - b)),
            q * b, q * (1 - b))


def criterion_5():
    problems = []
    for l in range(1, 7):
        C = binary_geom.cross_polytope(l)
        V = C.vertices
        n = len(V[0])
        unif = Fraction(1, n)
        if len(V) != 2 * l + 2 or len(set(V)) != 2 * l + 2:
            problems.append(f"l={l}: vertex count")
        for r in range(l):
            if any(x + y != 2 * unif for x, y in zip(C.E[r][0], C.E[r][1])):
                problems.append(f"l={l}: E midpoint r={r}")
        if any(x + y != 2 * unif for x, y in zip(C.u1, C.u2)):
            problems.append(f"l={l}: apex midpoint")
        if {tuple(2 * unif - x for x in v) for v in V} != set(V):
            problems.append(f"l={l}: central symmetry")
        if binary_geom.volume_ratio(l) != Fraction(1, 2 ** (l - 1)):
            problems.append(f"l={l}: volume ratio")
    h = Fraction(1, 2)
    ex1 = {(h, 0, h, 0), (h, 0, 0, h), (0, h, h, 0), (0, h, 0, h)}
    if set(binary_geom.cross_polytope(1).vertices) != ex1:
        problems.append("l=1 vertex set")
    rank_one = {(h, 0, h, 0), (0, h, 0, h)}      # rows equal: the common edge
    T1, T2 = binary_geom.model_simplices(1)
    if set(T1.vertices) & set(T2.vertices) != rank_one:
        problems.append("l=1 common edge")
    ex2 = {_phi22(Fraction(a), Fraction(b), Fraction(c)) for a in (0, 1) for b in (0, 1) for c in (0, 1)}
    if set(binary_geom.cross_polytope(2).vertices) != ex2:
        problems.append("l=2 vertex set")
    q = Fraction(1, 4)
    edge = {(q, 0, q, 0, q, 0, q, 0), (0, q, 0, q, 0, q, 0, q)}
    T1, T2 = binary_geom.model_simplices(2)
    if set(T1.vertices) & set(T2.vertices) != edge:
        problems.append("l=2 common edge")
    detail = "l=1..6: 2l+2 extreme vertices, midpoints, symmetry, ratio 1/2^(l-1); l=1,2 vertex sets match"
    return not problems, detail if not problems else "; ".join(problems), {}


# -- 6 --------------------------------------------------------------------------------------

def criterion_6(max_l: int = 4):
    counts, chis, times = {}, {}, {}
    for l in range(1, max_l + 1):
        t0 = time.perf_counter()
        A = arrangement.build_arrangement(l)
        chi = arrangement.characteristic_polynomial(A)
        _, bounded = arrangement.region_counts(A, chi)
        counts[l], chis[l] = bounded, chi
        times[l] = time.perf_counter() - t0
    agree = {}
    for l in range(1, max_l + 1):
        A = arrangement.build_arrangement(l)
        if A.dim <= arrangement.CROSS_CHECK_MAX_DIM:
            agree[l] = arrangement.bounded_regions_direct(A) == arrangement.region_counts(A, chis[l])
    consecutive = [l for l in range(1, max_l) if (counts[l], counts.get(l + 1)) == (9, 209)]
    fast = sum(times[l] for l in range(1, min(max_l, 3) + 1)) < 60 and times.get(4, 0) < 1800
    ok = counts[1] == 1 and bool(consecutive) and all(agree.values()) and fast
    detail = (f"bounded regions {counts}; (9, 209) at l={consecutive}; direct enumeration agrees "
              f"for l in {sorted(agree)}; times " + ", ".join(f"l={l}:{t:.1f}s" for l, t in times.items()))
    return ok, detail, {"counts": counts, "chi": chis}


# -- EM study shared by 7, 8, 11 -------------------------------------------------------------

@dataclass
class DatasetOutcome:
    l: int
    seed: int
    u: CountsTensor
    census: likelihood.LocalMaxCensus
    report: likelihood.MLEReport


def study_dataset(l: int, seed: int, restarts: int = EM_RESTARTS) -> DatasetOutcome:
    shape = ModelShape(l, 2)
    theta = sample_params(shape, seed)
    u = sample_data(shape, theta, EM_N, balanced=True, seed=seed)
    opts = likelihood.EMOptions(restarts=restarts, seed=seed, **EM_STUDY_OPTIONS)
    return DatasetOutcome(l, seed, u, likelihood.census(u, opts), likelihood.mle_binary(u))


@lru_cache(maxsize=None)
def em_study(n_datasets: int = EM_SEEDS, restarts: int = EM_RESTARTS) -> tuple:
    return tuple(study_dataset(l, s, restarts) for l in EM_LAGS for s in range(n_datasets))


def criterion_7(n_datasets: int = EM_SEEDS, restarts: int = EM_RESTARTS):
    study = em_study(n_datasets, restarts)
    too_many, mismatches = [], []
    exactly_two = 0
    for d in study:
        c = d.census
        if c.count > 2:
            too_many.append((d.l, d.seed, c.count))
        exactly_two += c.count == 2
        s1, s2 = d.report.simplex_maxima
        for mx in c.maxima:
            dist = min(np.max(np.abs(mx.point - s.point.array())) for s in (s1, s2))
            if dist > MATCH_TOL:
                mismatches.append((d.l, d.seed, float(dist)))
    frac = exactly_two / len(study)
    outside = sum(1 for d in study if d.report.kind == "BoundaryLocal")
    ok = not too_many and not mismatches and frac >= 0.9
    detail = (f"max clusters {max(d.census.count for d in study)}; exactly two in {exactly_two}/{len(study)} "
              f"({frac:.0%}, need >= 90%); p* outside the model in {outside}/{len(study)}; "
              f"representatives off a simplex maximum: {len(mismatches)}")
    return ok, detail, {"fraction_two": frac, "too_many": too_many, "mismatches": mismatches}


def printed_candidate(u: CountsTensor, j: int) -> ProbTensor:
    """Closed form for balanced data: ``u(i_{j-1}=a, i_l=b) / (m^(l-1) |u|)`` at each state."""
    shape = u.shape
    l, m = shape.l, shape.m
    pair: dict = {}
    for s, c in zip(shape.states(), u.counts):
        key = (s[j - 1], s[l])
        pair[key] = pair.get(key, 0) + c
    return ProbTensor(shape, [Fraction(pair[(s[j - 1], s[l])], m ** (l - 1) * u.total) for s in shape.states()])


def criterion_8(n_datasets: int = EM_SEEDS, restarts: int = EM_RESTARTS):
    study = em_study(n_datasets, restarts)
    bad_global, bad_formula = [], []
    markov_like = boundary = 0
    for d in study:
        u, rep = d.u, d.report
        pstar, _ = likelihood.maximize_over_polytope(u)
        mem = binary_geom.membership(d.l, pstar.point.values)
        T1, T2 = binary_geom.model_simplices(d.l)
        s = [likelihood.maximize_over_simplex(u, T.vertices) for T in (T1, T2)]
        candidates = s + ([pstar] if mem.in_model else [])
        best = max(candidates, key=lambda c: c.loglik)
        if abs(best.loglik - rep.global_loglik) > 1e-9 or np.max(np.abs(best.point.array() - rep.global_point.array())) > 1e-7:
            bad_global.append((d.l, d.seed))
        if any(mx.loglik > rep.global_loglik + 1e-7 for mx in d.census.maxima):
            bad_global.append((d.l, d.seed, "EM beats the global value"))
        cands = [likelihood.markov_candidate(u, j) for j in range(1, d.l + 1)]
        for j, cand in enumerate(cands, start=1):
            if cand != printed_candidate(u, j):
                bad_formula.append((d.l, d.seed, j))
        # how often a boundary local maximum is a pure fixed-lag chain (reported, not asserted)
        for mx in s:
            if binary_geom.membership(d.l, mx.point.values).region == binary_geom.Region.ON_DIAGONAL:
                continue
            if mx is best and rep.kind == "PStarInterior":
                continue
            boundary += 1
            if any(np.max(np.abs(mx.point.array() - c.array())) < 1e-7 for c in cands):
                markov_like += 1
    ok = not bad_global and not bad_formula
    detail = (f"global maximiser = best candidate in {len(study) - len(bad_global)}/{len(study)}; "
              f"closed-form candidates exact in {len(study) - len(set(x[:2] for x in bad_formula))}/{len(study)}; "
              f"boundary local maxima that are fixed-lag chains: {markov_like}/{boundary}")
    return ok, detail, {"bad_global": bad_global, "bad_formula": bad_formula}


# -- 9, 10, 11 ---------------------------------------------------------------------------------

def criterion_9(trials: int = 100):
    shape = ModelShape(2, 2)
    rng = np.random.default_rng(9)
    critical_ok = generic_ok = 0
    worst = 0.0
    C = binary_geom.cross_polytope(2)
    V = np.array([[float(x) for x in v] for v in C.vertices]).T
    for _ in range(trials):
        u = CountsTensor(shape, rng.integers(1, 101, size=8).tolist())
        pstar, _ = likelihood.maximize_over_polytope(u)
        sv, rank = likelihood.rank_certificate(u, pstar.point)
        worst = max(worst, sv[-1] / sv[0])
        critical_ok += rank <= 5 and sv[-1] / sv[0] < 1e-6
        p = V @ rng.dirichlet(np.ones(V.shape[1]))
        _, rank_generic = likelihood.rank_certificate(u, ProbTensor(shape, p))
        generic_ok += rank_generic == 6
    ok = critical_ok == trials and generic_ok == trials
    return ok, (f"rank <= 5 at p* in {critical_ok}/{trials} (worst ratio {worst:.1e}); "
                f"rank 6 at random points in {generic_ok}/{trials}"), {}


def criterion_10(points: int = 200):
    recovered = attempted = 0
    seed = 0
    while attempted < points:
        l, m = GRID[seed % len(GRID)]
        shape = ModelShape(l, m)
        theta = sample_params(shape, 10_000 + seed)
        seed += 1
        if theta.rows_equal():
            continue
        attempted += 1
        recovered += invert(shape, parametrize(shape, theta)) == theta
    raised = 0
    for l, m in GRID:
        shape = ModelShape(l, m)
        theta = sample_params(shape, l * 10 + m)
        row = list(theta.Q[0])
        equal = MTDParams.exact([row] * m, theta.lam)
        try:
            invert(shape, parametrize(shape, equal))
        except NonIdentifiable:
            raised += 1
    ok = recovered == points and raised == len(GRID)
    return ok, f"exact recovery {recovered}/{points}; NonIdentifiable raised {raised}/{len(GRID)}", {}


def criterion_11(n_datasets: int = EM_SEEDS, restarts: int = EM_RESTARTS):
    study = em_study(n_datasets, restarts)
    worst = min(d.census.min_increment for d in study)
    # single steps from fresh random starts, checked one at a time
    rng = np.random.default_rng(11)
    step_worst = math.inf
    for d in study[:: max(1, len(study) // 20)]:
        Q0, lam0 = likelihood.random_inits(d.u.shape, 5, rng)
        for Q, lam in zip(Q0, lam0):
            theta = MTDParams.real(Q, lam)
            for _ in range(20):
                nxt = likelihood.em_step(d.u, theta)
                before = likelihood.log_likelihood(d.u, parametrize(d.u.shape, theta))
                after = likelihood.log_likelihood(d.u, parametrize(d.u.shape, nxt))
                step_worst = min(step_worst, after - before)
                theta = nxt
    ok = worst >= -1e-12 and step_worst >= -1e-12
    return ok, f"smallest log-likelihood change per step: {min(worst, step_worst):.2e} (limit -1e-12)", {}


CRITERIA = {
    1: ("Golden Groebner basis for (l, m) = (2, 3)", criterion_1),
    2: ("Groebner verification on the grid", criterion_2),
    3: ("Dimension and degree of the variety", criterion_3),
    4: ("Dimension of the linear span", criterion_4),
    5: ("Binary cross-polytope geometry and volume ratio", criterion_5),
    6: ("ML degrees by bounded-region counts", criterion_6),
    7: ("EM census: at most two local maxima", criterion_7),
    8: ("Trichotomy of the binary MLE", criterion_8),
    9: ("Rank certificate at the polytope maximiser", criterion_9),
    10: ("Identifiability round trip", criterion_10),
    11: ("EM monotonicity", criterion_11),
}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    claim, fn = CRITERIA[number]
    return _timed(number, claim, lambda: fn(**kwargs))


def run_all(numbers=None, em_datasets: int = EM_SEEDS, em_restarts: int = EM_RESTARTS,
            max_l: int = 4, report=None) -> list[CriterionResult]:
    results = []
    for k in numbers or sorted(CRITERIA):
        kwargs = {}
        if k in (7, 8, 11):
            kwargs = {"n_datasets": em_datasets, "restarts": em_restarts}
        elif k == 6:
            kwargs = {"max_l": max_l}
        res = run_criterion(k, **kwargs)
        results.append(res)
        if report:
            report(res.line())
    return results


def format_table(results) -> str:
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} criteria passed")
    return "\n".join(lines)
