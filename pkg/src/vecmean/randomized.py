"""Restricted randomized algorithms and vector Monte Carlo.

A restricted randomized algorithm has a finite probability space: branch
``w`` is taken with probability ``weights[w]``, reads ``f`` at the fixed nodes
``nodes[w]`` and maps the values through an arbitrary output map.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from . import dist
from .errors import DimensionMismatchError, DomainError, ResourceError
from .spaces import TabFn, VecX, norm as lpnorm

EXACT_BRANCH_LIMIT = 10 ** 6
WEIGHT_TOL = 1e-12
Z95 = 1.959963984540054

# rows gathered per vectorized chunk
_CHUNK_ELEMS = 1 << 22


class ErrorEstimate(NamedTuple):
    value: float
    halfwidth: float
    exact: bool


@dataclass(frozen=True, eq=False)
class RestrictedRandAlg:
    """Finite-Omega nonadaptive randomized algorithm.

    ``out_map(w, values)`` gets the branch index and the ``(n, M)`` array of
    sampled values. ``batch_out(ws, values)``, if given, evaluates many
    branches at once from a ``(B, n, M)`` array.
    """

    weights: np.ndarray
    nodes: np.ndarray
    out_map: Callable[[int, np.ndarray], Any]
    batch_out: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        nodes = np.asarray(self.nodes, dtype=np.int64)
        if nodes.ndim == 1 and nodes.size == 0:
            nodes = nodes.reshape(w.size, 0)
        if w.size == 0:
            raise DomainError("Omega must be nonempty")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise DomainError("weights must be positive and sum to 1")
        if nodes.ndim != 2 or nodes.shape[0] != w.size:
            raise DimensionMismatchError("need one node tuple per branch")
        w.setflags(write=False)
        nodes.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_branches(cls, branches) -> "RestrictedRandAlg":
        """Build from ``[(weight, nodes, phi), ...]`` with ``phi(values)``."""
        branches = list(branches)
        maps = [b[2] for b in branches]
        n = len(branches[0][1]) if branches else 0
        nodes = np.array([list(b[1]) for b in branches], dtype=np.int64).reshape(len(branches), n)
        return cls(np.array([b[0] for b in branches]), nodes,
                   lambda w, vals: maps[w](vals))

    @property
    def n(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.weights.size

    def outputs(self, f: TabFn, ws: np.ndarray | None = None) -> list:
        """Outputs of the branches ``ws`` (default: all) on input ``f``."""
        ws = np.arange(self.size) if ws is None else np.asarray(ws)
        if self.n and (self.nodes.min() < 0 or self.nodes.max() >= f.N):
            raise DomainError("node outside the domain of f")
        if self.batch_out is None:
            return [self.out_map(int(w), f.values[self.nodes[w]]) for w in ws]
        out = []
        step = max(1, _CHUNK_ELEMS // max(1, self.n * f.M))
        for s in range(0, ws.size, step):
            chunk = ws[s:s + step]
            out.extend(self.batch_out(chunk, f.values[self.nodes[chunk]]))
        return out


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def run_restricted(a: RestrictedRandAlg, f: TabFn, omega: int | None = None, seed=None):
    """``phi^w(f(t_1^w), ..., f(t_n^w))``; ``w`` is drawn by weight if not given."""
    if omega is None:
        omega = int(_rng(seed).choice(a.size, p=a.weights))
    if not 0 <= omega < a.size:
        raise DomainError(f"branch {omega} outside Omega")
    return a.outputs(f, np.array([omega]))[0]


def output_distribution(a: RestrictedRandAlg, f: TabFn) -> list[tuple[Any, float]]:
    return dist.group(a.outputs(f), a.weights)


def _errors(outs, exact, norm, p: float) -> np.ndarray:
    """Error of every output; vectorized when ``norm`` is the default."""
    exact = np.atleast_1d(np.asarray(exact, dtype=float))
    if norm is None:
        arr = np.asarray(outs, dtype=float).reshape(len(outs), -1)
        return np.asarray(lpnorm(exact - arr, p, axis=-1), dtype=float)
    return np.array([float(norm(exact - np.atleast_1d(np.asarray(o, dtype=float))))
                     for o in outs])


def ran_error_detail(a: RestrictedRandAlg, solution: Callable[[TabFn], Any],
                     F_test: Sequence[TabFn], norm: Callable | None = None,
                     exact_limit: int = EXACT_BRANCH_LIMIT, samples: int = 10000,
                     seed=0) -> ErrorEstimate:
    """``max_f E||S(f) - A^w(f)||`` over ``F_test``.

    Exact when ``|Omega| <= exact_limit``; otherwise ``samples`` branches are
    drawn and a 95% CLT half-width is reported for the maximizing input.
    """
    F_test = list(F_test)
    if not F_test:
        raise DomainError("empty test family")
    exact_mode = a.size <= exact_limit
    rng = _rng(seed)
    best = ErrorEstimate(-1.0, 0.0, exact_mode)
    for f in F_test:
        exact = solution(f)
        if exact_mode:
            errs = _errors(a.outputs(f), exact, norm, f.space.p)
            est = ErrorEstimate(float(errs @ a.weights), 0.0, True)
        else:
            ws = rng.choice(a.size, size=samples, p=a.weights)
            errs = _errors(a.outputs(f, ws), exact, norm, f.space.p)
            hw = Z95 * errs.std(ddof=1) / math.sqrt(samples) if samples > 1 else math.inf
            est = ErrorEstimate(float(errs.mean()), float(hw), False)
        if est.value > best.value:
            best = est
    return best


def ran_error(a: RestrictedRandAlg, solution, F_test, norm=None, **kw) -> float:
    return ran_error_detail(a, solution, F_test, norm, **kw).value


def chebyshev_mass(a: RestrictedRandAlg, f: TabFn, solution, norm=None,
                   factor: float = 4.0) -> float:
    """Probability that the error is at most ``factor`` times its mean."""
    errs = _errors(a.outputs(f), solution(f), norm, f.space.p)
    mean = float(errs @ a.weights)
    return float(a.weights[errs <= factor * mean + 1e-15].sum())


# -- Monte Carlo ----------------------------------------------------------

@dataclass(frozen=True)
class MCSampler:
    """Plain Monte Carlo ``(1/n) sum_l f(xi_l)`` with i.i.d. uniform nodes."""

    N: int
    n: int

    def nodes(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.N, size=self.n)

    def __call__(self, f: TabFn, seed=None) -> VecX:
        self._check(f)
        if self.n == 0:
            return f.space.zero()
        xi = self.nodes(_rng(seed))
        return VecX(f.evaluate(xi).mean(axis=0), f.space)

    def _check(self, f: TabFn):
        if f.N != self.N:
            raise DimensionMismatchError(f"sampler built for N={self.N}, f has N={f.N}")

    def estimates(self, f: TabFn, trials: int, seed=None) -> np.ndarray:
        """``(trials, M)`` array of independent estimates."""
        self._check(f)
        rng = _rng(seed)
        if self.n == 0:
            return np.zeros((trials, f.M))
        out = np.empty((trials, f.M))
        step = max(1, _CHUNK_ELEMS // max(1, self.n * f.M))
        for s in range(0, trials, step):
            k = min(step, trials - s)
            xi = rng.integers(0, self.N, size=(k, self.n))
            out[s:s + k] = f.values[xi].mean(axis=1)
        return out

    def error(self, f: TabFn, trials: int, seed=None, norm=None) -> ErrorEstimate:
        nrm = norm or (lambda d, p=f.space.p: lpnorm(d, p, axis=-1))
        errs = np.asarray(nrm(f.values.mean(axis=0) - self.estimates(f, trials, seed)))
        hw = Z95 * errs.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
        return ErrorEstimate(float(errs.mean()), float(hw), False)


def _mean_batch(ws, vals):
    return vals.mean(axis=1)


def mc_mean(N: int, n: int, mode: str = "implicit"):
    """Vector Monte Carlo with ``n`` nodes on ``{0..N-1}``.

    ``mode="implicit"`` returns a seeded :class:`MCSampler`;
    ``mode="explicit"`` materializes Omega = all ``N^n`` node tuples with
    uniform weights as a :class:`RestrictedRandAlg`.
    """
    if N < 1 or n < 0:
        raise DomainError("need N >= 1 and n >= 0")
    if mode == "implicit":
        return MCSampler(N, n)
    if mode != "explicit":
        raise DomainError(f"unknown mode {mode!r}")
    size = N ** n
    if size > EXACT_BRANCH_LIMIT:
        raise ResourceError(f"N^n = {size} branches exceeds {EXACT_BRANCH_LIMIT}")
    if n == 0:
        nodes = np.zeros((1, 0), dtype=np.int64)
    else:
        nodes = np.array(list(itertools.product(range(N), repeat=n)), dtype=np.int64)

    def out_map(w, vals):
        return vals.mean(axis=0) if n else np.zeros(vals.shape[-1] if vals.ndim == 2 else 1)

    batch = _mean_batch if n else None
    return RestrictedRandAlg(np.full(size, 1.0 / size), nodes, out_map, batch)


def mc_many_sums(a: TabFn, f: TabFn, n: int, seed=None) -> VecX:
    """Estimate all M weighted means from one shared sample of ``n`` nodes.

    Component ``i`` is ``(1/n) sum_l a_i(xi_l) f(xi_l)``; ``f`` is evaluated
    exactly ``n`` times regardless of M.
    """
    if a.N != f.N:
        raise DimensionMismatchError(f"a has N={a.N} but f has N={f.N}")
    if n == 0:
        return a.space.zero()
    xi = MCSampler(f.N, n).nodes(_rng(seed))
    fx = f.evaluate(xi)[:, 0]
    return VecX(fx @ a.values[xi] / n, a.space)


def mc_many_sums_estimates(a: TabFn, f: TabFn, n: int, trials: int, seed=None) -> np.ndarray:
    """``(trials, M)`` independent many-sums estimates."""
    if a.N != f.N:
        raise DimensionMismatchError(f"a has N={a.N} but f has N={f.N}")
    rng = _rng(seed)
    out = np.empty((trials, a.M))
    fv = f.scalar_values
    step = max(1, _CHUNK_ELEMS // max(1, n * a.M))
    for s in range(0, trials, step):
        k = min(step, trials - s)
        xi = rng.integers(0, f.N, size=(k, n))
        out[s:s + k] = np.einsum("tl,tlm->tm", fv[xi], a.values[xi]) / n
    return out
