"""Command-line entry point: ``mtdgeom <command> [flags]``.

Exit codes: 0 success, 1 a verified property failed, 2 invalid input.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import arrangement, binary_geom, ideal, likelihood, repro
from .algebra import TermOrder
from .errors import MTDError, NonIdentifiable, NotInModel
from .model import (
    CountsTensor,
    ModelShape,
    MTDParams,
    ProbTensor,
    invert,
    load_json,
    parametrize,
    sample_data,
    sample_params,
)

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _frac(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _num(x):
    return _frac(x) if isinstance(x, (Fraction, int)) else float(x)


def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, indent=2, sort_keys=False) if args.format == "json" else text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _shape(args, binary: bool = False) -> ModelShape:
    if args.l is None:
        raise UsageError("--l is required")
    m = 2 if binary else args.m
    if binary and args.m not in (None, 2):
        raise UsageError("this command needs m = 2")
    return ModelShape(args.l, m if m is not None else 2)


def _load(path: str, kind):
    try:
        return kind.from_json(load_json(path))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


# -- commands -----------------------------------------------------------------------------

def cmd_generate_ideal(args) -> int:
    shape = _shape(args)
    gs = ideal.full_basis(shape, TermOrder(ranking=args.ranking))
    _emit(args, gs.to_json(), gs.to_text())
    return OK


def _verify(args, name, check) -> int:
    shape = _shape(args)
    ok = check(shape)
    _emit(args, {"l": shape.l, "m": shape.m, name: ok}, f"{name} (l={shape.l}, m={shape.m}): {'true' if ok else 'false'}")
    return OK if ok else FAILED


def cmd_verify_vanishing(args) -> int:
    return _verify(args, "vanishing", ideal.verify_vanishing)


def cmd_verify_groebner(args) -> int:
    return _verify(args, "groebner", lambda s: ideal.verify_groebner(s) and ideal.leading_terms_match(ideal.full_basis(s)))


def cmd_verify_dims(args) -> int:
    from math import comb
    shape = _shape(args)
    l, m = shape.l, shape.m
    span = ideal.span_dimension(shape)
    dim, deg = ideal.variety_dim_degree(shape)
    expected = {"span": (m - 1) * (l * m - l + 1), "dim": (m - 1) * m + l - 1,
                "degree": comb(l + (m - 1) ** 2 - 2, l - 1)}
    got = {"span": span, "dim": dim, "degree": deg}
    ok = got == expected
    payload = {"l": l, "m": m, "computed": got, "expected": expected, "ok": ok}
    text = (f"span dimension {span} (expected {expected['span']})\n"
            f"variety dimension {dim} (expected {expected['dim']})\n"
            f"degree {deg} (expected {expected['degree']})\n"
            f"{'ok' if ok else 'MISMATCH'}")
    _emit(args, payload, text)
    return OK if ok else FAILED


def cmd_geometry(args) -> int:
    shape = _shape(args, binary=True)
    l = shape.l
    C = binary_geom.cross_polytope(l)
    T1, T2 = binary_geom.model_simplices(l)
    labels = C.vertex_labels()
    lookup = dict(zip(C.vertices, labels))
    ratio = binary_geom.volume_ratio(l)
    payload = {
        "l": l,
        "states": list(shape.states()),
        "vertices": {lab: [_frac(x) for x in v] for lab, v in zip(labels, C.vertices)},
        "simplices": {"1": [lookup[v] for v in T1.vertices], "2": [lookup[v] for v in T2.vertices]},
        "volume_ratio": _frac(ratio),
    }
    lines = [f"cross-polytope for l={l}, coordinates " + " ".join(shape.states())]
    lines += [f"{lab}: " + " ".join(_frac(x) for x in v) for lab, v in zip(labels, C.vertices)]
    lines.append("simplex 1: " + ", ".join(payload["simplices"]["1"]))
    lines.append("simplex 2: " + ", ".join(payload["simplices"]["2"]))
    lines.append(f"volume ratio: {_frac(ratio)}")
    _emit(args, payload, "\n".join(lines))
    return OK


def cmd_volume_ratio(args) -> int:
    l = _shape(args, binary=True).l
    r = binary_geom.volume_ratio(l)
    _emit(args, {"l": l, "volume_ratio": _frac(r)}, _frac(r))
    return OK if r == Fraction(1, 2 ** (l - 1)) else FAILED


def cmd_membership(args) -> int:
    p = _load(args.point, ProbTensor)
    if p.shape.m != 2:
        raise UsageError("membership is defined for m = 2")
    mem = binary_geom.membership(p.shape.l, p.values)
    bary = None if mem.barycentric is None else [_num(x) for x in mem.barycentric]
    payload = {"region": mem.region.value, "barycentric": bary}
    text = mem.region.value + ("" if bary is None else " " + " ".join(str(x) for x in bary))
    _emit(args, payload, text)
    return OK


def cmd_model_eval(args) -> int:
    theta = _load(args.params, MTDParams)
    p = parametrize(theta.shape, theta)
    text = "\n".join(f"p_{s} = {_num(v)}" for s, v in zip(p.shape.states(), p.values))
    _emit(args, p.to_json(), text)
    return OK


def cmd_invert(args) -> int:
    p = _load(args.point, ProbTensor)
    theta = invert(p.shape, p)
    text = "\n".join(["Q:"] + ["  " + " ".join(str(_num(x)) for x in row) for row in theta.Q]
                     + ["lambda: " + " ".join(str(_num(x)) for x in theta.lam)])
    _emit(args, theta.to_json(), text)
    return OK


def cmd_sample(args) -> int:
    shape = _shape(args)
    theta = _load(args.params, MTDParams) if args.params else sample_params(shape, args.seed)
    if theta.shape != shape:
        raise UsageError("parameter file shape does not match --l/--m")
    u = sample_data(shape, theta, args.n, args.balanced, args.seed)
    payload = {**u.to_json(), "params": theta.to_json()}
    text = "\n".join(f"{s} {c}" for s, c in zip(shape.states(), u.counts))
    _emit(args, payload, text)
    return OK


def _options(args) -> likelihood.EMOptions:
    return likelihood.EMOptions(max_iter=args.max_iter, loglik_tol=args.tol, restarts=args.restarts, seed=args.seed)


def _census_payload(c: likelihood.LocalMaxCensus, shape: ModelShape) -> dict:
    return {
        "clusters": [
            {"p": dict(zip(shape.states(), map(float, mx.point))), "loglik": mx.loglik, "basin": mx.basin,
             "params": mx.params.to_json()}
            for mx in c.maxima
        ],
        "restarts": c.restarts,
        "cluster_tol": c.cluster_tol,
        "all_converged": c.all_converged,
        "min_increment": c.min_increment,
    }


def _report_payload(rep: likelihood.MLEReport, shape: ModelShape) -> dict:
    s1, s2 = rep.simplex_maxima
    return {
        "kind": rep.kind,
        "side": rep.side,
        "global": {"p": dict(zip(shape.states(), map(float, rep.global_point.values))), "loglik": rep.global_loglik},
        "pstar": {"p": dict(zip(shape.states(), map(float, rep.pstar.point.values))), "loglik": rep.pstar.loglik,
                  "region": rep.pstar_membership.region.value},
        "simplex_maxima": [
            {"side": k, "loglik": s.loglik, "barycentric": list(map(float, s.barycentric)),
             "kkt_residual": s.kkt_residual}
            for k, s in ((1, s1), (2, s2))
        ],
    }


def _census_text(c: likelihood.LocalMaxCensus) -> list[str]:
    lines = [f"{c.count} cluster(s) from {c.restarts} restarts"]
    for k, mx in enumerate(c.maxima, 1):
        lines.append(f"  cluster {k}: loglik {mx.loglik:.10f}, basin {mx.basin}")
    return lines


def _report_text(rep: likelihood.MLEReport) -> list[str]:
    s1, s2 = rep.simplex_maxima
    return [f"trichotomy: {rep.kind} (global side {rep.side})",
            f"  global loglik {rep.global_loglik:.10f}",
            f"  p* loglik {rep.pstar.loglik:.10f}, region {rep.pstar_membership.region.value}",
            f"  simplex maxima: {s1.loglik:.10f} (side 1), {s2.loglik:.10f} (side 2)"]


def cmd_census(args) -> int:
    u = _load(args.data, CountsTensor)
    c = likelihood.census(u, _options(args))
    ok = u.shape.m != 2 or c.within_binary_bound()
    _emit(args, _census_payload(c, u.shape), "\n".join(_census_text(c)))
    return OK if ok else FAILED


def cmd_mle(args) -> int:
    u = _load(args.data, CountsTensor)
    rep = likelihood.mle_binary(u)
    _emit(args, _report_payload(rep, u.shape), "\n".join(_report_text(rep)))
    return OK


def cmd_certificate(args) -> int:
    u = _load(args.data, CountsTensor)
    if args.point:
        p = _load(args.point, ProbTensor)
    else:
        p = likelihood.maximize_over_polytope(u)[0].point
    sv, rank = likelihood.rank_certificate(u, p)
    payload = {"singular_values": sv.tolist(), "rank": rank}
    _emit(args, payload, "singular values: " + " ".join(f"{x:.6e}" for x in sv) + f"\nrank: {rank}")
    return OK


def cmd_fit_em(args) -> int:
    u = _load(args.data, CountsTensor)
    shape = u.shape
    c = likelihood.census(u, _options(args))
    payload = _census_payload(c, shape)
    lines = _census_text(c)
    if shape.m == 2:
        rep = likelihood.mle_binary(u)
        payload["trichotomy"] = _report_payload(rep, shape)
        lines += _report_text(rep)
        if shape.l == 2:
            sv, rank = likelihood.rank_certificate(u, rep.pstar.point)
            payload["certificate"] = {"singular_values": sv.tolist(), "rank": rank}
            lines.append(f"certificate rank at p*: {rank}")
    _emit(args, payload, "\n".join(lines))
    return OK if shape.m != 2 or c.within_binary_bound() else FAILED


def cmd_ml_degree(args) -> int:
    top = args.l if args.l is not None else 3
    if not 1 <= top <= 4:
        raise UsageError("--l must lie in 1..4")
    counts, chi = {}, None
    for l in range(1, top + 1):
        A = arrangement.build_arrangement(l)
        chi = arrangement.characteristic_polynomial(A)
        counts[str(l)] = arrangement.region_counts(A, chi)[1]
        if A.dim <= arrangement.CROSS_CHECK_MAX_DIM:
            arrangement.bounded_regions(A)      # raises if the two counters disagree
    desc = list(reversed(chi))
    _emit(args, {"counts": counts, "chi": desc},
          "\n".join(f"l={k}: {v}" for k, v in counts.items()) + "\nchi (highest power first): " + " ".join(map(str, desc)))
    return OK


def cmd_repro(args) -> int:
    numbers = [int(x) for x in args.only.split(",")] if args.only else None
    results = repro.run_all(numbers, em_datasets=args.datasets, em_restarts=args.restarts)
    payload = {"criteria": [{"number": r.number, "claim": r.claim, "passed": r.passed,
                             "detail": r.detail, "seconds": round(r.seconds, 2)} for r in results]}
    _emit(args, payload, repro.format_table(results))
    return OK if all(r.passed for r in results) else FAILED


# -- parser ---------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--l", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out")

    em = argparse.ArgumentParser(add_help=False)
    em.add_argument("--data", required=True, help="counts JSON file")
    em.add_argument("--restarts", type=int, default=100)
    em.add_argument("--max-iter", type=int, default=10000)
    em.add_argument("--tol", type=float, default=1e-10, help="log-likelihood gain threshold")

    parser = argparse.ArgumentParser(prog="mtdgeom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, *parents, help=None):
        p = sub.add_parser(name, parents=[common, *parents], help=help)
        p.set_defaults(func=fn)
        return p

    p = add("generate-ideal", cmd_generate_ideal, help="print the Groebner basis")
    p.add_argument("--ranking", choices=("suffix", "prefix"), default="suffix")
    add("verify-vanishing", cmd_verify_vanishing, help="generators vanish on the parametrisation")
    add("verify-groebner", cmd_verify_groebner, help="Buchberger criterion and designated leading terms")
    add("verify-dims", cmd_verify_dims, help="span dimension, variety dimension and degree")
    add("geometry", cmd_geometry, help="binary cross-polytope and model simplices")
    add("volume-ratio", cmd_volume_ratio, help="model volume over polytope volume")
    p = add("membership", cmd_membership, help="classify a distribution")
    p.add_argument("--point", required=True)
    p = add("model-eval", cmd_model_eval, help="evaluate the parametrisation")
    p.add_argument("--params", required=True)
    p = add("invert", cmd_invert, help="recover parameters from a model point")
    p.add_argument("--point", required=True)
    p = add("sample", cmd_sample, help="sample counts")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--balanced", action="store_true")
    p.add_argument("--params")
    add("fit-em", cmd_fit_em, em, help="EM census, trichotomy and certificate")
    add("census", cmd_census, em, help="EM local-maxima census")
    p = add("mle", cmd_mle, help="binary maximum likelihood with trichotomy report")
    p.add_argument("--data", required=True)
    p = add("certificate", cmd_certificate, help="rank certificate singular values")
    p.add_argument("--data", required=True)
    p.add_argument("--point")
    add("ml-degree", cmd_ml_degree, help="bounded-region counts up to --l")
    p = add("repro", cmd_repro, help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.add_argument("--datasets", type=int, default=repro.EM_SEEDS)
    p.add_argument("--restarts", type=int, default=repro.EM_RESTARTS)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    try:
        return args.func(args)
    except (UsageError, NonIdentifiable, NotInModel, ValueError, MTDError) as exc:
        if isinstance(exc, AssertionError):
            print(f"verification failed: {exc}", file=sys.stderr)
            return FAILED
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
