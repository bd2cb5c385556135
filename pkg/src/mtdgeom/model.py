"""The mixture transition distribution model: states, parametrization, inverse.

A point of the model is the law of a length ``l+1`` sequence over ``m``
symbols whose first ``l`` symbols are uniform and whose last symbol is drawn
by picking a lag ``j`` with probability ``lam_j`` and then applying the
transition matrix ``Q`` to the symbol at position ``j-1``::

    p[i_0 ... i_l] = m**-l * sum_j lam_j * Q[i_{j-1}, i_l]

Everything runs in two modes: exact (``Fraction`` entries) for verification
and double precision (numpy) for optimisation.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .algebra.linalg import exact_rank
from .algebra.polynomial import Polynomial, lam_var, q_var
from .errors import BalanceError, NonIdentifiable, NotInModel, ShapeError

REAL_TOL = 1e-12
INVERT_TOL = 1e-9


@dataclass(frozen=True)
class ModelShape:
    l: int
    m: int

    def __post_init__(self):
        if self.l < 1:
            raise ShapeError("l must be a positive integer")
        if not 2 <= self.m <= 9:
            raise ShapeError("m must lie in 2..9 (digit-string state encoding)")

    @property
    def N(self) -> int:
        return self.m ** (self.l + 1) - 1

    @property
    def size(self) -> int:
        return self.m ** (self.l + 1)

    def states(self) -> tuple[str, ...]:
        return _states(self.l, self.m)

    def index(self, state: str) -> int:
        return _state_index(self.l, self.m)[state]

    @property
    def n_free_params(self) -> int:
        return (self.m - 1) * self.m + self.l - 1

    def special(self, pos: int, sym: int, last: int) -> str:
        """State ``m..m sym m..m last`` with ``sym`` at position ``pos`` (0-based)."""
        s = [str(self.m)] * self.l
        s[pos] = str(sym)
        return "".join(s) + str(last)

    def constant(self, last: int) -> str:
        return str(self.m) * self.l + str(last)


@lru_cache(maxsize=None)
def _states(l: int, m: int) -> tuple[str, ...]:
    alphabet = "".join(str(i) for i in range(1, m + 1))
    return tuple("".join(t) for t in itertools.product(alphabet, repeat=l + 1))


@lru_cache(maxsize=None)
def _state_index(l: int, m: int) -> dict:
    return {s: i for i, s in enumerate(_states(l, m))}


@lru_cache(maxsize=None)
def index_arrays(l: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """``(src, last)``: 0-based symbol at each lag position and the last symbol, per state."""
    digits = np.array([[int(c) - 1 for c in s] for s in _states(l, m)], dtype=np.intp)
    src = np.ascontiguousarray(digits[:, :l])
    last = np.ascontiguousarray(digits[:, l])
    src.setflags(write=False)
    last.setflags(write=False)
    return src, last


def _is_exact(x) -> bool:
    return isinstance(x, (Fraction, int)) and not isinstance(x, bool)


@dataclass(frozen=True, eq=False)
class MTDParams:
    """Transition matrix ``Q`` (rows indexed by symbol) and mixture weights ``lam``.

    Exact parameters hold tuples of ``Fraction``; real parameters hold float
    numpy arrays.
    """

    Q: object
    lam: object

    @classmethod
    def exact(cls, Q, lam) -> "MTDParams":
        Qt = tuple(tuple(Fraction(x) for x in row) for row in Q)
        lt = tuple(Fraction(x) for x in lam)
        return cls(Qt, lt)

    @classmethod
    def real(cls, Q, lam) -> "MTDParams":
        Qa = np.array(Q, dtype=float)
        la = np.array(lam, dtype=float)
        return cls(Qa, la)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.lam, tuple)

    @property
    def m(self) -> int:
        return len(self.Q)

    @property
    def l(self) -> int:
        return len(self.lam)

    @property
    def shape(self) -> ModelShape:
        return ModelShape(self.l, self.m)

    def to_real(self) -> "MTDParams":
        if not self.is_exact:
            return self
        return MTDParams.real([[float(x) for x in row] for row in self.Q], [float(x) for x in self.lam])

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        r = self.to_real()
        return r.Q, r.lam

    def validate(self, shape: ModelShape | None = None) -> None:
        if shape is not None and (self.m != shape.m or self.l != shape.l):
            raise ShapeError(f"parameters are for (l={self.l}, m={self.m}), not (l={shape.l}, m={shape.m})")
        if any(len(row) != self.m for row in self.Q):
            raise ShapeError("Q must be square")
        if self.is_exact:
            rows_ok = all(sum(row) == 1 and min(row) >= 0 for row in self.Q)
            lam_ok = sum(self.lam) == 1 and min(self.lam) >= 0
        else:
            Q, lam = np.asarray(self.Q), np.asarray(self.lam)
            rows_ok = bool(np.all(Q >= 0) and np.all(np.abs(Q.sum(axis=1) - 1) <= REAL_TOL))
            lam_ok = bool(np.all(lam >= 0) and abs(lam.sum() - 1) <= REAL_TOL)
        if not rows_ok:
            raise ShapeError("rows of Q must be probability vectors")
        if not lam_ok:
            raise ShapeError("lam must be a probability vector")

    def __eq__(self, other):
        if not isinstance(other, MTDParams):
            return NotImplemented
        if self.is_exact and other.is_exact:
            return self.Q == other.Q and self.lam == other.lam
        a, b = self.to_real(), other.to_real()
        return np.array_equal(a.Q, b.Q) and np.array_equal(a.lam, b.lam)

    def rows_equal(self) -> bool:
        return all(list(row) == list(self.Q[0]) for row in self.Q)

    # -- JSON
    def to_json(self) -> dict:
        fmt = (lambda x: _frac_str(x)) if self.is_exact else float
        return {
            "l": self.l,
            "m": self.m,
            "Q": [[fmt(x) for x in row] for row in self.Q],
            "lambda": [fmt(x) for x in self.lam],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "MTDParams":
        Q, lam = data["Q"], data["lambda"]
        if all(isinstance(x, (str, int)) for row in Q for x in row) and all(isinstance(x, (str, int)) for x in lam):
            params = cls.exact(Q, lam)
        else:
            params = cls.real(Q, lam)
        if "l" in data and "m" in data:
            params.validate(ModelShape(int(data["l"]), int(data["m"])))
        else:
            params.validate()
        return params


def _frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class ProbTensor:
    """A distribution on ``[m]^(l+1)``; values are in state order."""

    __slots__ = ("shape", "values")

    def __init__(self, shape: ModelShape, values):
        if len(values) != shape.size:
            raise ShapeError(f"expected {shape.size} values, got {len(values)}")
        self.shape = shape
        if isinstance(values, np.ndarray) or not all(_is_exact(v) for v in values):
            self.values = np.asarray(values, dtype=float)
        else:
            self.values = tuple(Fraction(v) for v in values)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.values, tuple)

    def __getitem__(self, state: str):
        return self.values[self.shape.index(state)]

    def __len__(self):
        return len(self.values)

    def array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values]) if self.is_exact else self.values

    def to_real(self) -> "ProbTensor":
        return ProbTensor(self.shape, self.array())

    def as_dict(self) -> dict:
        return dict(zip(self.shape.states(), self.values))

    def __eq__(self, other):
        if not isinstance(other, ProbTensor):
            return NotImplemented
        if self.shape != other.shape:
            return False
        if self.is_exact and other.is_exact:
            return self.values == other.values
        return bool(np.array_equal(self.array(), other.array()))

    def __repr__(self):
        return f"ProbTensor({self.shape}, {list(self.values)!r})"

    def to_json(self) -> dict:
        fmt = _frac_str if self.is_exact else float
        return {"l": self.shape.l, "m": self.shape.m,
                "p": {s: fmt(v) for s, v in zip(self.shape.states(), self.values)}}

    @classmethod
    def from_json(cls, data: Mapping) -> "ProbTensor":
        shape = ModelShape(int(data["l"]), int(data["m"]))
        p = data["p"]
        vals = [p[s] for s in shape.states()]
        if all(isinstance(v, (str, int)) for v in vals):
            vals = [Fraction(v) for v in vals]
        return cls(shape, vals)


class CountsTensor:
    """Frequency counts ``u`` of observed sequences, in state order."""

    __slots__ = ("shape", "counts")

    def __init__(self, shape: ModelShape, counts: Sequence[int]):
        if len(counts) != shape.size:
            raise ShapeError(f"expected {shape.size} counts, got {len(counts)}")
        counts = tuple(int(c) for c in counts)
        if min(counts) < 0:
            raise ShapeError("counts must be nonnegative")
        self.shape = shape
        self.counts = counts

    @classmethod
    def from_mapping(cls, shape: ModelShape, counts: Mapping[str, int]) -> "CountsTensor":
        unknown = set(counts) - set(shape.states())
        if unknown:
            raise ShapeError(f"unknown states: {sorted(unknown)}")
        return cls(shape, [counts.get(s, 0) for s in shape.states()])

    @property
    def total(self) -> int:
        return sum(self.counts)

    def array(self) -> np.ndarray:
        return np.array(self.counts, dtype=float)

    def __getitem__(self, state: str) -> int:
        return self.counts[self.shape.index(state)]

    def scaled(self, k: int) -> "CountsTensor":
        return CountsTensor(self.shape, [k * c for c in self.counts])

    def prefix_balanced(self) -> bool:
        """True iff every length-``l`` prefix occurs equally often."""
        m = self.shape.m
        sums = [sum(self.counts[i:i + m]) for i in range(0, len(self.counts), m)]
        return len(set(sums)) == 1

    def __eq__(self, other):
        return isinstance(other, CountsTensor) and self.shape == other.shape and self.counts == other.counts

    def to_json(self) -> dict:
        return {"l": self.shape.l, "m": self.shape.m,
                "counts": dict(zip(self.shape.states(), self.counts))}

    @classmethod
    def from_json(cls, data: Mapping) -> "CountsTensor":
        shape = ModelShape(int(data["l"]), int(data["m"]))
        return cls.from_mapping(shape, {str(k): int(v) for k, v in data["counts"].items()})


# -- parametrization ----------------------------------------------------------

def parametrize(shape: ModelShape, params: MTDParams) -> ProbTensor:
    """Image of ``params`` under the model map."""
    params.validate(shape)
    l, m = shape.l, shape.m
    if params.is_exact:
        scale = Fraction(1, m ** l)
        Q, lam = params.Q, params.lam
        vals = []
        for s in shape.states():
            d = [int(c) - 1 for c in s]
            last = d[l]
            vals.append(scale * sum(lam[j] * Q[d[j]][last] for j in range(l)))
        return ProbTensor(shape, vals)
    Q, lam = params.arrays()
    return ProbTensor(shape, parametrize_array(l, m, Q, lam))


def parametrize_array(l: int, m: int, Q: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Vectorised model map; ``Q``/``lam`` may carry leading batch axes."""
    src, last = index_arrays(l, m)
    # Q[..., src, last] -> (..., states, l)
    vals = Q[..., src, last[:, None]]
    return np.einsum("...sj,...j->...s", vals, lam) / m ** l


def symbolic_parametrize(shape: ModelShape) -> list[Polynomial]:
    """Pull-back of every state unknown to the free parameters.

    ``lam_l = 1 - sum_{j<l} lam_j`` and ``q_{i,m} = 1 - sum_{r<m} q_{i,r}`` are
    eliminated, so relations that hold on the parameter simplices become
    literal polynomial identities.
    """
    return list(_symbolic_parametrize(shape.l, shape.m))


@lru_cache(maxsize=None)
def _symbolic_parametrize(l: int, m: int) -> tuple[Polynomial, ...]:
    shape = ModelShape(l, m)
    Qs = [[_q_poly(i, r, m) for r in range(1, m + 1)] for i in range(1, m + 1)]
    lams = [Polynomial.var(lam_var(j)) for j in range(1, l)]
    lams.append(1 - sum(lams, Polynomial.zero()))
    scale = Fraction(1, m ** l)
    out = []
    for s in shape.states():
        d = [int(c) for c in s]
        acc = Polynomial.zero()
        for j in range(l):
            acc = acc + lams[j] * Qs[d[j] - 1][d[l] - 1]
        out.append(acc.scale(scale))
    return tuple(out)


def _q_poly(i: int, r: int, m: int) -> Polynomial:
    if r < m:
        return Polynomial.var(q_var(i, r))
    return 1 - sum((Polynomial.var(q_var(i, k)) for k in range(1, m)), Polynomial.zero())


def free_param_vars(shape: ModelShape) -> list:
    """Free parameter variables: ``q_{i,r}`` with ``r < m`` (row-major), then ``lam_j`` with ``j < l``."""
    qs = [q_var(i, r) for i in range(1, shape.m + 1) for r in range(1, shape.m)]
    return qs + [lam_var(j) for j in range(1, shape.l)]


def param_values(params: MTDParams) -> dict:
    """Values of the free parameter variables at ``params``."""
    vals = {}
    for i in range(1, params.m + 1):
        for r in range(1, params.m):
            vals[q_var(i, r)] = params.Q[i - 1][r - 1]
    for j in range(1, params.l):
        vals[lam_var(j)] = params.lam[j - 1]
    return vals


# -- identifiability ----------------------------------------------------------

def invert(shape: ModelShape, p: ProbTensor) -> MTDParams:
    """Recover the parameters of a model point.

    ``Q[i][j] = m**l * p[i...ij]`` (constant-lag states); each ``lam_k`` comes
    from ``p[m..i..m r] - p[m..m r] = m**-l * lam_k * (Q[i][r] - Q[m][r])``
    with ``i`` at position ``k-1``.
    """
    if p.shape != shape:
        raise ShapeError("tensor shape does not match model shape")
    l, m = shape.l, shape.m
    exact = p.is_exact
    scale = m ** l
    Q = [[scale * p[str(i) * l + str(j)] for j in range(1, m + 1)] for i in range(1, m + 1)]
    if exact:
        diffs = [(abs(Q[i][r] - Q[m - 1][r]), i, r) for i in range(m - 1) for r in range(m)]
        best = max(diffs, key=lambda t: t[0])
        if best[0] == 0:
            raise NonIdentifiable("all rows of the transition matrix are equal")
    else:
        diffs = [(abs(float(Q[i][r] - Q[m - 1][r])), i, r) for i in range(m - 1) for r in range(m)]
        best = max(diffs, key=lambda t: t[0])
        if best[0] <= INVERT_TOL:
            raise NonIdentifiable("all rows of the transition matrix are equal")
    _, i, r = best
    denom = Q[i][r] - Q[m - 1][r]
    lam = []
    for k in range(l):
        diff = p[shape.special(k, i + 1, r + 1)] - p[shape.constant(r + 1)]
        lam.append(scale * diff / denom)
    total = sum(lam)
    lam = [x / total for x in lam]
    if exact:
        if min(lam) < 0 or any(min(row) < 0 for row in Q) or any(sum(row) != 1 for row in Q):
            raise NotInModel("recovered parameters leave the parameter simplices")
        params = MTDParams.exact(Q, lam)
        if parametrize(shape, params) != p:
            raise NotInModel("point does not lie on the model")
        return params
    Qa, la = np.array(Q, dtype=float), np.array(lam, dtype=float)
    if la.min() < -INVERT_TOL or Qa.min() < -INVERT_TOL or np.max(np.abs(Qa.sum(axis=1) - 1)) > INVERT_TOL:
        raise NotInModel("recovered parameters leave the parameter simplices")
    Qa, la = np.clip(Qa, 0, None), np.clip(la, 0, None)
    Qa /= Qa.sum(axis=1, keepdims=True)
    la /= la.sum()
    residual = np.max(np.abs(parametrize_array(l, m, Qa, la) - p.array()))
    if residual > INVERT_TOL:
        raise NotInModel(f"round-trip residual {residual:.3g} exceeds {INVERT_TOL}")
    return MTDParams.real(Qa, la)


def jacobian(shape: ModelShape, params: MTDParams) -> list[list[Fraction]]:
    """Exact Jacobian of the model map in the free parameters (rows = states)."""
    l, m = shape.l, shape.m
    Q, lam = params.Q, params.lam
    scale = Fraction(1, m ** l)
    rows = []
    for s in shape.states():
        d = [int(c) - 1 for c in s]
        last = d[l]
        row = []
        # d/dq_{a,r}, r < m:  q_{a,m} = 1 - sum_{r<m} q_{a,r}
        for a in range(m):
            for r in range(m - 1):
                w = sum(lam[j] for j in range(l) if d[j] == a)
                sign = (last == r) - (last == m - 1)
                row.append(scale * w * sign)
        # d/dlam_j, j < l:  lam_l = 1 - sum_{j<l} lam_j
        for j in range(l - 1):
            row.append(scale * (Q[d[j]][last] - Q[d[l - 1]][last]))
        rows.append(row)
    return rows


def jacobian_rank(shape: ModelShape, params: MTDParams) -> int:
    params.validate(shape)
    if not params.is_exact:
        raise ValueError("jacobian_rank needs exact parameters")
    return exact_rank(jacobian(shape, params))


# -- sampling -------------------------------------------------------------------

DENOM = 10 ** 6


def _rational_simplex_point(x: np.ndarray) -> list[Fraction]:
    k = [max(1, int(round(v * DENOM))) for v in x[:-1]]
    last = DENOM - sum(k)
    while last < 1:
        j = max(range(len(k)), key=lambda t: k[t])
        k[j] -= 1 - last
        last = 1
    return [Fraction(v, DENOM) for v in k] + [Fraction(last, DENOM)]


def sample_params(shape: ModelShape, seed: int) -> MTDParams:
    """Uniform draw from ``(simplex)^m x simplex``, rounded to denominators dividing 10**6."""
    rng = np.random.default_rng(seed)
    rows = [_rational_simplex_point(rng.dirichlet(np.ones(shape.m))) for _ in range(shape.m)]
    lam = _rational_simplex_point(rng.dirichlet(np.ones(shape.l))) if shape.l > 1 else [Fraction(1)]
    return MTDParams.exact(rows, lam)


def sample_data(shape: ModelShape, params: MTDParams, n: int, balanced: bool, seed: int) -> CountsTensor:
    """Draw ``n`` sequences from the model's generative description."""
    l, m = shape.l, shape.m
    params.validate(shape)
    n_prefix = m ** l
    rng = np.random.default_rng(seed)
    if balanced:
        if n % n_prefix:
            raise BalanceError(f"n={n} is not divisible by m**l={n_prefix}")
        prefix_idx = np.repeat(np.arange(n_prefix), n // n_prefix)
    else:
        prefix_idx = rng.integers(0, n_prefix, size=n)
    # digits of each prefix, most significant first
    digits = np.stack([(prefix_idx // m ** (l - 1 - k)) % m for k in range(l)], axis=1)
    Q, lam = params.arrays()
    lags = rng.choice(l, size=n, p=lam / lam.sum())
    source = digits[np.arange(n), lags]
    cum = np.cumsum(Q, axis=1)
    cum[:, -1] = 1.0
    draws = rng.random(n)
    last = (draws[:, None] >= cum[source]).sum(axis=1)
    state_idx = prefix_idx * m + last
    counts = np.bincount(state_idx, minlength=shape.size)
    return CountsTensor(shape, counts.tolist())


def load_json(path: str):
    with open(path) as fh:
        return json.load(fh)
