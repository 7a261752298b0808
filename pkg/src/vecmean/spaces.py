"""Normed sequence spaces L_p^M with the normalized counting measure.

All norms here average over coordinates before taking the p-th root, so the
constant vector of ones has norm 1 in every L_p^M. Tabulated inputs
``f: {0..N-1} -> X`` are stored as an ``(N, M)`` array.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, DomainError

INF = math.inf

# Exact sign enumeration up to this many vectors (2**12 patterns).
EXACT_SIGN_LIMIT = 12


def norm(x, p: float, axis: int = -1) -> np.ndarray | float:
    """Normalized p-norm ``((1/M) sum |x_i|^p)^(1/p)`` along ``axis``."""
    a = np.abs(np.asarray(x, dtype=float))
    if a.shape[axis] == 0:
        raise DomainError("norm of an empty vector")
    if p == INF:
        return a.max(axis=axis)
    if p == 1:
        return a.mean(axis=axis)
    # scale by the max to avoid overflow and underflow
    scale = a.max(axis=axis, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    r = np.mean((a / safe) ** p, axis=axis) ** (1.0 / p)
    return r * np.squeeze(safe, axis=axis)


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        p = float(p)
    return float(p)


@dataclass(frozen=True)
class LpSpec:
    """The space L_p^M; ``p`` may be ``math.inf``."""

    p: float
    M: int

    def __post_init__(self):
        object.__setattr__(self, "p", _parse_p(self.p))
        if not self.p >= 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if int(self.M) != self.M or self.M < 1:
            raise DomainError(f"M must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    def norm(self, coords, axis: int = -1):
        return norm(coords, self.p, axis=axis)

    def zero(self) -> "VecX":
        return VecX(np.zeros(self.M), self)

    @property
    def p_json(self):
        return "inf" if self.p == INF else self.p


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class VecX:
    coords: np.ndarray
    space: LpSpec

    def __post_init__(self):
        c = _frozen(np.atleast_1d(np.asarray(self.coords, dtype=float)))
        if c.ndim != 1 or c.shape[0] != self.space.M:
            raise DimensionMismatchError(
                f"expected {self.space.M} coordinates, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise DomainError("coordinates must be finite")
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self):
        return f"VecX({self.coords.tolist()}, p={self.space.p}, M={self.space.M})"


def lp_norm(v: VecX) -> float:
    return float(v.space.norm(v.coords))


@dataclass(frozen=True, eq=False)
class TabFn:
    """A function on ``{0, ..., N-1}`` with values in ``space``.

    ``values[i]`` is ``f(i)``; the scalar case is ``M == 1``.
    """

    values: np.ndarray
    space: LpSpec

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1 and self.space.M == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] != self.space.M or v.shape[0] < 1:
            raise DimensionMismatchError(
                f"values of shape {v.shape} do not fit N x {self.space.M}")
        if not np.all(np.isfinite(v)):
            raise DomainError("values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def scalar(cls, values, p: float = INF) -> "TabFn":
        return cls(np.asarray(values, dtype=float).reshape(-1, 1), LpSpec(p, 1))

    @classmethod
    def from_vectors(cls, vectors) -> "TabFn":
        vectors = list(vectors)
        space = vectors[0].space
        if any(v.space != space for v in vectors):
            raise DimensionMismatchError("all values must share one space")
        return cls(np.stack([v.coords for v in vectors]), space)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def M(self) -> int:
        return self.space.M

    def __call__(self, i: int) -> VecX:
        if not 0 <= i < self.N:
            raise DomainError(f"index {i} outside [0, {self.N})")
        return VecX(self.values[i], self.space)

    def evaluate(self, idx) -> np.ndarray:
        """Rows ``f(i)`` for an array of indices (one evaluation per entry)."""
        idx = np.asarray(idx)
        if idx.size and (idx.min() < 0 or idx.max() >= self.N):
            raise DomainError("node outside the domain of f")
        return self.values[idx]

    @property
    def scalar_values(self) -> np.ndarray:
        if self.M != 1:
            raise DimensionMismatchError("not a scalar function")
        return self.values[:, 0]

    def sup_norm(self) -> float:
        """``max_i ||f(i)||_X``, the L_inf^N(X) norm."""
        return float(np.max(self.space.norm(self.values, axis=1)))

    def map(self, fn) -> "TabFn":
        """Apply ``fn: X -> X`` to every value."""
        return TabFn(np.stack([np.asarray(fn(row), dtype=float) for row in self.values]),
                     self.space)

    # -- serialization -------------------------------------------------
    def to_json(self) -> str:
        return json.dumps({"N": self.N, "M": self.M, "p": self.space.p_json,
                           "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "TabFn":
        d = json.loads(text)
        f = cls(np.asarray(d["values"], dtype=float).reshape(d["N"], d["M"]),
                LpSpec(d["p"], d["M"]))
        return f

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.values:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, p: float = INF) -> "TabFn":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        values = np.array([[float(x) for x in r] for r in rows])
        return cls(values, LpSpec(p, values.shape[1]))

    def save(self, path) -> None:
        path = Path(path)
        text = self.to_csv() if path.suffix == ".csv" else self.to_json()
        path.write_text(text)

    @classmethod
    def load(cls, path, p: float = INF) -> "TabFn":
        path = Path(path)
        text = path.read_text()
        if path.suffix == ".csv":
            return cls.from_csv(text, p=p)
        return cls.from_json(text)


def mean_S_N(f: TabFn) -> VecX:
    return VecX(f.values.mean(axis=0), f.space)


def many_sums_T(a: TabFn, f: TabFn) -> VecX:
    """Weighted vector mean ``(1/N) sum_j f(j) a(j)`` for scalar ``f``."""
    if a.N != f.N:
        raise DimensionMismatchError(f"a has N={a.N} but f has N={f.N}")
    return VecX(f.scalar_values @ a.values / a.N, a.space)


def type_constant_estimate(xs, p: float, trials: int = 2000, seed: int = 0) -> float:
    """Lower witness for the type-p constant of the space of ``xs``.

    Returns ``(E||sum eps_i x_i||^p / sum ||x_i||^p)^(1/p)`` with Rademacher
    signs ``eps``. The expectation is exact for up to 12 vectors and estimated
    from ``trials`` seeded sign draws beyond that.
    """
    xs = list(xs)
    if not xs:
        raise DomainError("need at least one vector")
    space = xs[0].space
    if any(x.space != space for x in xs):
        raise DimensionMismatchError("all vectors must share one space")
    if not 1 < p <= 2:
        raise DomainError(f"type exponent must lie in (1, 2], got {p}")
    X = np.stack([x.coords for x in xs])
    denom = np.sum(space.norm(X, axis=1) ** p)
    if denom == 0:
        return 0.0
    m = len(xs)
    if m <= EXACT_SIGN_LIMIT:
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=m)))
    else:
        rng = np.random.default_rng(seed)
        signs = rng.choice((-1.0, 1.0), size=(trials, m))
    num = np.mean(space.norm(signs @ X, axis=1) ** p)
    return float((num / denom) ** (1.0 / p))


def walsh_witness(M: int) -> list[VecX]:
    """Rows of the M x M Walsh matrix as vectors of L_inf^M (M a power of 2).

    The default family for probing how the type-2 constant of L_inf^M grows.
    """
    from .reductions import walsh_matrix

    k = int(round(math.log2(M)))
    if 2 ** k != M:
        raise DomainError("M must be a power of two")
    space = LpSpec(INF, M)
    return [VecX(row, space) for row in walsh_matrix(k)]
