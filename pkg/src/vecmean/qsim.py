"""Exact sparse state-vector simulator for the quantum query model.

Basis index ``l`` of an ``m``-qubit register is read MSB first: wire 0 is the
most significant bit, so a register split ``|i>|x>|y>`` puts ``i`` in the
leading wires. States are stored sparsely as sorted index/amplitude arrays;
every operation returns a new state.

An algorithm ``QAlg`` applies ``U_n Q_f U_{n-1} ... U_1 Q_f U_0`` to ``|b>``,
measures once and maps the outcome through ``out``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import dist
from .errors import ContractError, DimensionMismatchError, DomainError, ResourceError
from .spaces import TabFn, norm as lpnorm

DEFAULT_QUBIT_CAP = 24
AMP_EPS = 1e-15
NORM_TOL = 1e-10
UNITARY_TOL = 1e-12

H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _combine(idx: np.ndarray, amps: np.ndarray):
    """Sum amplitudes of repeated indices, drop negligible ones, sort."""
    if idx.size == 0:
        return idx.astype(np.int64), amps.astype(complex)
    u, inv = np.unique(idx, return_inverse=True)
    if u.size == idx.size:
        order = np.argsort(idx, kind="stable")
        out_i, out_a = idx[order], amps[order]
    else:
        re = np.bincount(inv, weights=amps.real, minlength=u.size)
        im = np.bincount(inv, weights=amps.imag, minlength=u.size)
        out_i, out_a = u, re + 1j * im
    keep = np.abs(out_a) >= AMP_EPS
    return out_i[keep].astype(np.int64), out_a[keep].astype(complex)


def _shift(m: int, wire: int) -> int:
    if not 0 <= wire < m:
        raise DomainError(f"wire {wire} outside a {m}-qubit register")
    return m - 1 - wire


def _check_unitary(u: np.ndarray, what: str) -> None:
    u = np.asarray(u)
    d = u.shape[-1]
    err = np.abs(np.swapaxes(u.conj(), -1, -2) @ u - np.eye(d)).max()
    if err > UNITARY_TOL:
        raise ContractError(f"{what} is not unitary (deviation {err:.2e})")


@dataclass(frozen=True, eq=False)
class QState:
    m: int
    idx: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64)
        amps = np.asarray(self.amps, dtype=complex)
        if idx.shape != amps.shape or idx.ndim != 1:
            raise DimensionMismatchError("index and amplitude arrays differ in shape")
        if idx.size and (idx.min() < 0 or idx.max() >= 1 << self.m):
            raise DomainError(f"basis index outside [0, 2^{self.m})")
        if abs(float(np.sum(np.abs(amps) ** 2)) - 1.0) > NORM_TOL:
            raise DomainError("state is not normalized")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            idx, amps = _combine(idx, amps)
        idx.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis(cls, m: int, b: int) -> "QState":
        return cls(m, np.array([b]), np.array([1.0 + 0j]))

    @classmethod
    def from_dict(cls, m: int, amps: Mapping[int, complex]) -> "QState":
        items = sorted(amps.items())
        return cls(m, np.array([k for k, _ in items], dtype=np.int64),
                   np.array([v for _, v in items], dtype=complex))

    @classmethod
    def from_dense(cls, vec) -> "QState":
        vec = np.asarray(vec, dtype=complex)
        m = int(round(math.log2(vec.size)))
        nz = np.flatnonzero(np.abs(vec) >= AMP_EPS)
        return cls(m, nz, vec[nz])

    def to_dict(self) -> dict[int, complex]:
        return {int(i): complex(a) for i, a in zip(self.idx, self.amps)}

    def dense(self) -> np.ndarray:
        v = np.zeros(1 << self.m, dtype=complex)
        v[self.idx] = self.amps
        return v

    def amplitude(self, ell: int) -> complex:
        pos = np.searchsorted(self.idx, ell)
        if pos < self.idx.size and self.idx[pos] == ell:
            return complex(self.amps[pos])
        return 0j

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def probabilities(self):
        return self.idx, np.abs(self.amps) ** 2


# -- unitary representations ------------------------------------------------

class UnitarySpec:
    """A unitary on ``H_m`` acting on sparse amplitude arrays."""

    def act(self, m: int, idx: np.ndarray, amps: np.ndarray):
        raise NotImplementedError

    def adjoint(self) -> "UnitarySpec":
        raise NotImplementedError(f"{type(self).__name__} has no adjoint")


@dataclass(frozen=True, eq=False)
class BasisPermutation(UnitarySpec):
    """A bijection of basis indices, given as a table or a vectorized function.

    ``func`` maps an int64 index array to an int64 index array; ``inverse``
    is only needed for :meth:`adjoint`.
    """

    table: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    inverse: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.int64)
            if np.unique(t).size != t.size or t.min() < 0 or t.max() >= t.size:
                raise ContractError("permutation table is not a bijection")
            if t.size & (t.size - 1):
                raise ContractError("permutation table length must be a power of two")
            t.setflags(write=False)
            object.__setattr__(self, "table", t)

    @classmethod
    def identity(cls) -> "BasisPermutation":
        return cls(func=lambda i: i, inverse=lambda i: i)

    def act(self, m, idx, amps):
        if self.table is not None:
            if self.table.size != 1 << m:
                raise DimensionMismatchError("permutation table does not match m")
            new = self.table[idx]
        elif self.func is not None:
            new = np.asarray(self.func(idx), dtype=np.int64)
        else:
            new = idx
        if new.size and (new.min() < 0 or new.max() >= 1 << m):
            raise ContractError("permutation leaves the register")
        order = np.argsort(new, kind="stable")
        new = new[order]
        if new.size > 1 and np.any(np.diff(new) == 0):
            raise ContractError("permutation is not injective on the support")
        return new, amps[order]

    def adjoint(self):
        if self.table is not None:
            inv = np.empty_like(self.table)
            inv[self.table] = np.arange(self.table.size)
            return BasisPermutation(table=inv)
        if self.func is None:
            return self
        if self.inverse is None:
            raise NotImplementedError("no inverse function supplied")
        return BasisPermutation(func=self.inverse, inverse=self.func)


@dataclass(frozen=True, eq=False)
class PreparedColumn(UnitarySpec):
    """Any unitary mapping ``|b>`` to ``target``, known only on ``|b>``."""

    b: int
    target: Mapping[int, complex]

    def __post_init__(self):
        tgt = {int(k): complex(v) for k, v in dict(self.target).items()}
        nrm = math.sqrt(sum(abs(v) ** 2 for v in tgt.values()))
        if abs(nrm - 1.0) > UNITARY_TOL:
            raise ContractError(f"target vector has norm {nrm}, expected 1")
        object.__setattr__(self, "target", tgt)

    def act(self, m, idx, amps):
        if idx.size != 1 or int(idx[0]) != self.b or abs(abs(amps[0]) - 1) > UNITARY_TOL:
            raise ContractError(f"prepared column applied to a state other than |{self.b}>")
        if any(k >= 1 << m or k < 0 for k in self.target):
            raise DomainError("target index outside the register")
        keys = sorted(self.target)
        return (np.array(keys, dtype=np.int64),
                np.array([self.target[k] for k in keys], dtype=complex) * amps[0])


@dataclass(frozen=True, eq=False)
class SingleQubitGate(UnitarySpec):
    wire: int
    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix, dtype=complex)
        if u.shape != (2, 2):
            raise DimensionMismatchError("single-qubit gate must be 2x2")
        _check_unitary(u, "gate matrix")
        object.__setattr__(self, "matrix", u)

    def act(self, m, idx, amps):
        s = _shift(m, self.wire)
        bit = (idx >> s) & 1
        base = idx & ~np.int64(1 << s)
        u = self.matrix
        return _combine(np.concatenate([base, base | (1 << s)]),
                        np.concatenate([u[0, bit] * amps, u[1, bit] * amps]))

    def adjoint(self):
        return SingleQubitGate(self.wire, self.matrix.conj().T)


def _control_pattern(m, controls, values):
    mask = want = 0
    for w, v in zip(controls, values):
        s = _shift(m, w)
        mask |= 1 << s
        want |= int(v) << s
    return np.int64(mask), np.int64(want)


@dataclass(frozen=True, eq=False)
class ControlledGate(UnitarySpec):
    """``inner`` applied where every control wire holds its control value.

    Control values default to 1. ``inner`` must not change the control wires.
    """

    controls: tuple
    inner: UnitarySpec
    control_values: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        vals = self.control_values
        vals = (1,) * len(self.controls) if vals is None else tuple(int(v) for v in vals)
        if len(vals) != len(self.controls):
            raise DimensionMismatchError("one control value per control wire")
        object.__setattr__(self, "control_values", vals)

    def act(self, m, idx, amps):
        mask, want = _control_pattern(m, self.controls, self.control_values)
        sel = (idx & mask) == want
        if not sel.any():
            return idx, amps
        i2, a2 = self.inner.act(m, idx[sel], amps[sel])
        if np.any((i2 & mask) != want):
            raise ContractError("controlled operator modified its control wires")
        return _combine(np.concatenate([idx[~sel], i2]), np.concatenate([amps[~sel], a2]))

    def adjoint(self):
        return ControlledGate(self.controls, self.inner.adjoint(), self.control_values)


@dataclass(frozen=True, eq=False)
class UniformlyControlledGate(UnitarySpec):
    """Applies ``matrices[c]`` to ``target`` where ``c`` is the value held by
    the control wires (first control wire most significant)."""

    controls: tuple
    target: int
    matrices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.shape != (1 << len(self.controls), 2, 2):
            raise DimensionMismatchError("need one 2x2 matrix per control value")
        if self.target in self.controls:
            raise ContractError("target wire is also a control wire")
        _check_unitary(mats, "uniformly controlled matrices")
        mats.setflags(write=False)
        object.__setattr__(self, "matrices", mats)

    def act(self, m, idx, amps):
        c = np.zeros_like(idx)
        for w in self.controls:
            c = (c << 1) | ((idx >> _shift(m, w)) & 1)
        s = _shift(m, self.target)
        bit = (idx >> s) & 1
        base = idx & ~np.int64(1 << s)
        u = self.matrices[c]
        return _combine(np.concatenate([base, base | (1 << s)]),
                        np.concatenate([u[:, 0, :][np.arange(idx.size), bit] * amps,
                                        u[:, 1, :][np.arange(idx.size), bit] * amps]))

    def adjoint(self):
        return UniformlyControlledGate(self.controls, self.target,
                                       np.swapaxes(self.matrices.conj(), 1, 2))


@dataclass(frozen=True, eq=False)
class InverseQFT(UnitarySpec):
    """Inverse Fourier transform on wires ``start .. stop-1``.

    ``|y> -> 2^{-w/2} sum_k exp(-2 pi i y k / 2^w) |k>`` with ``w = stop - start``;
    ``forward=True`` flips the sign of the exponent (the adjoint).
    """

    start: int
    stop: int
    forward: bool = False

    def act(self, m, idx, amps):
        w = self.stop - self.start
        if w < 1 or self.start < 0 or self.stop > m:
            raise DomainError("invalid wire range for the Fourier transform")
        D = 1 << w
        lo = m - self.stop
        y = (idx >> lo) & (D - 1)
        rest = idx & ~np.int64((D - 1) << lo)
        urest, inv = np.unique(rest, return_inverse=True)
        dense = np.zeros((urest.size, D), dtype=complex)
        dense[inv, y] = amps
        if self.forward:
            out = np.fft.ifft(dense, axis=1) * math.sqrt(D)
        else:
            out = np.fft.fft(dense, axis=1) / math.sqrt(D)
        r, k = np.nonzero(np.abs(out) >= AMP_EPS)
        return _combine(urest[r] | (k.astype(np.int64) << lo), out[r, k])

    def adjoint(self):
        return InverseQFT(self.start, self.stop, not self.forward)


@dataclass(frozen=True, eq=False)
class Composite(UnitarySpec):
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        flat = []
        for p in self.parts:
            flat.extend(p.parts if isinstance(p, Composite) else [p])
        object.__setattr__(self, "parts", tuple(flat))

    def act(self, m, idx, amps):
        for p in self.parts:
            idx, amps = p.act(m, idx, amps)
        return idx, amps

    def adjoint(self):
        return Composite(tuple(p.adjoint() for p in reversed(self.parts)))


def apply_unitary(u: UnitarySpec, s: QState) -> QState:
    idx, amps = u.act(s.m, s.idx, s.amps)
    return QState(s.m, idx, amps)


# -- queries ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QueryDef:
    """The query tuple ``(m, m', m'', Z, tau, beta)``.

    ``m_index`` and ``m_value`` are the widths of the leading index register
    and of the value register that follows it. ``tau`` gives the domain index
    queried for each element of ``Z`` (mapping, callable, or array aligned
    with ``Z``); ``beta`` encodes a value of ``f`` as an integer in
    ``[0, 2^m_value)``.
    """

    m: int
    m_index: int
    m_value: int
    Z: Any
    tau: Any
    beta: Callable[[np.ndarray], int]

    def __post_init__(self):
        if min(self.m, self.m_index, self.m_value) < 1:
            raise DomainError("register widths must be positive")
        if self.m_index + self.m_value > self.m:
            raise DomainError("m' + m'' exceeds m")
        Zs = np.array(sorted(int(z) for z in self.Z), dtype=np.int64)
        if Zs.size and (Zs[0] < 0 or Zs[-1] >= 1 << self.m_index):
            raise DomainError("Z must lie in [0, 2^m')")
        if np.unique(Zs).size != Zs.size:
            raise DomainError("Z has repeated entries")
        tau = self.tau
        if callable(tau):
            t = np.array([int(tau(int(z))) for z in Zs], dtype=np.int64)
        elif isinstance(tau, Mapping):
            t = np.array([int(tau[int(z)]) for z in Zs], dtype=np.int64)
        else:
            t = np.asarray(tau, dtype=np.int64).reshape(-1)
            order = np.argsort(np.array([int(z) for z in self.Z], dtype=np.int64), kind="stable")
            t = t[order]
            if t.size != Zs.size:
                raise DimensionMismatchError("tau must have one entry per element of Z")
        Zs.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "Z", Zs)
        object.__setattr__(self, "tau", t)

    def bind(self, f: TabFn) -> "BoundQuery":
        if self.tau.size and (self.tau.min() < 0 or self.tau.max() >= f.N):
            raise DomainError("tau maps outside the domain of f")
        cache: dict[int, int] = {}
        shifts = np.empty(self.Z.size, dtype=np.int64)
        for k, node in enumerate(self.tau):
            node = int(node)
            if node not in cache:
                code = int(self.beta(f.values[node]))
                if not 0 <= code < 1 << self.m_value:
                    raise DomainError(f"beta returned {code}, outside [0, 2^m'')")
                cache[node] = code
            shifts[k] = cache[node]
        return BoundQuery(self, shifts)


@dataclass(eq=False)
class BoundQuery(UnitarySpec):
    """``Q_f`` for a fixed input ``f``; counts its applications."""

    query: QueryDef
    shifts: np.ndarray
    calls: int = 0

    def act(self, m, idx, amps):
        q = self.query
        if m != q.m:
            raise DimensionMismatchError(f"query defined on {q.m} qubits, state has {m}")
        self.calls += 1
        if q.Z.size == 0:
            return idx, amps
        low = q.m - q.m_index - q.m_value
        i = idx >> (q.m - q.m_index)
        x = (idx >> low) & ((1 << q.m_value) - 1)
        pos = np.minimum(np.searchsorted(q.Z, i), q.Z.size - 1)
        hit = q.Z[pos] == i
        add = np.where(hit, self.shifts[pos], 0)
        x2 = (x + add) & ((1 << q.m_value) - 1)
        new = idx + ((x2 - x) << low)
        order = np.argsort(new, kind="stable")
        return new[order], amps[order]


def apply_query(q: QueryDef, f: TabFn, s: QState) -> QState:
    if s.m != q.m:
        raise DimensionMismatchError(f"query defined on {q.m} qubits, state has {s.m}")
    idx, amps = q.bind(f).act(s.m, s.idx, s.amps)
    return QState(s.m, idx, amps)


# -- algorithms -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QAlg:
    """``(Q, (U_0..U_n), b, out)``; ``n = len(unitaries) - 1`` queries.

    ``out`` maps a measured basis index to an output value. ``out_batch``, if
    given, does the same for an index array and is used for speed.
    """

    query: QueryDef
    unitaries: tuple
    b: int
    out: Callable[[int], Any]
    out_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "unitaries", tuple(self.unitaries))
        if not self.unitaries:
            raise DomainError("need at least U_0")
        if not 0 <= self.b < 1 << self.query.m:
            raise DomainError("initial basis index outside the register")

    @property
    def m(self) -> int:
        return self.query.m

    @property
    def n(self) -> int:
        return len(self.unitaries) - 1


def _check_cap(m: int, cap: int) -> None:
    if m > cap:
        raise ResourceError(f"algorithm needs m={m} qubits, cap is {cap}")


def final_state(alg: QAlg, f: TabFn, cap: int = DEFAULT_QUBIT_CAP,
                return_queries: bool = False):
    """The state ``U_n Q_f ... U_1 Q_f U_0 |b>``."""
    _check_cap(alg.m, cap)
    qf = alg.query.bind(f)
    m = alg.m
    idx, amps = np.array([alg.b], dtype=np.int64), np.array([1.0 + 0j])
    idx, amps = alg.unitaries[0].act(m, idx, amps)
    for u in alg.unitaries[1:]:
        idx, amps = qf.act(m, idx, amps)
        idx, amps = u.act(m, idx, amps)
    s = QState(m, idx, amps)
    return (s, qf.calls) if return_queries else s


def _outputs(alg: QAlg, idx: np.ndarray):
    if alg.out_batch is not None:
        return list(alg.out_batch(idx))
    return [alg.out(int(i)) for i in idx]


def run_exact(alg: QAlg, f: TabFn, cap: int = DEFAULT_QUBIT_CAP) -> list[tuple[Any, float]]:
    """Exact output distribution ``[(value, probability), ...]``."""
    s = final_state(alg, f, cap)
    idx, probs = s.probabilities()
    return dist.group(_outputs(alg, idx), probs)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def run_sample(alg: QAlg, f: TabFn, seed=None, cap: int = DEFAULT_QUBIT_CAP):
    """One run: measure the final state and return ``out`` of the outcome."""
    s = final_state(alg, f, cap)
    idx, probs = s.probabilities()
    ell = _rng(seed).choice(idx, p=probs / probs.sum())
    return alg.out(int(ell))


def quantum_error(alg: QAlg, solution: Callable[[TabFn], Any], F_test: Sequence[TabFn],
                  norm: Callable | None = None, level: float = 0.75,
                  cap: int = DEFAULT_QUBIT_CAP) -> float:
    """``max_f min{e : P(||S(f) - A(f)|| <= e) >= 3/4}`` over ``F_test``.

    ``norm`` defaults to the normalized p-norm of each input's space.
    """
    F_test = list(F_test)
    if not F_test:
        raise DomainError("empty test family")
    worst = 0.0
    for f in F_test:
        nrm = norm or (lambda d, p=f.space.p: float(lpnorm(np.atleast_1d(d), p)))
        d = run_exact(alg, f, cap)
        worst = max(worst, dist.error_quantile(d, solution(f), nrm, level))
    return worst
