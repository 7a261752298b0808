"""Amplitude estimation for scalar means inside the query model.

Both algorithms run phase estimation of a Grover operator on a ``t``-qubit
phase register and output ``sin^2(pi y / 2^t)`` for the measured phase ``y``.
The input is touched only through the algorithm's single query; everything
else is an ``f``-independent unitary.

Counting (Boolean ``f``), wires ``[index r][x 1][phase t]``:
the value qubit is kept in ``|+>``; a controlled-Z from the active phase
qubit turns it into ``|->`` just before a query, so the query acts as the
phase oracle only on the controlled branch (``|+>`` is invariant under bit
flips). One query per Grover step, ``2^t - 1`` in total.

Mean (``[0, 1]``- or ``[-1, 1]``-valued ``f``), wires
``[index r][x m*][anc 1][phase t]``: the state preparation ``A`` queries the
discretized value into ``x``, rotates the ancilla by it, and uncomputes ``x``
with a second query framed by modular negation. The Grover step is
``A R_0 A^dagger S`` with only ``R_0`` and ``S`` controlled, since ``A A^dagger``
cancels on the idle branch.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, ResourceError
from .qsim import (DEFAULT_QUBIT_CAP, H, Z, BasisPermutation, Composite,
                   ControlledGate, InverseQFT, QAlg, QueryDef, SingleQubitGate,
                   UniformlyControlledGate, ry)
from .reductions import beta_discretize, gamma_undiscretize
from .spaces import TabFn

SUCCESS_PROB = 8 / math.pi ** 2


def ae_error_bound(a: float, t: int) -> float:
    """``2 pi sqrt(a(1-a)) / 2^t + pi^2 / 4^t``, the single-run accuracy
    reached with probability at least ``8/pi^2``."""
    D = 2 ** t
    return 2 * math.pi * math.sqrt(max(a * (1 - a), 0.0)) / D + math.pi ** 2 / D ** 2


def _log2_exact(N: int) -> int:
    r = int(round(math.log2(N))) if N > 0 else -1
    if r < 1 or 2 ** r != N:
        raise DomainError(f"N must be a power of two >= 2, got {N}")
    return r


def _reflect_zero(wires, control: int) -> Composite:
    """Controlled ``2|0><0| - I`` on ``wires``: ``-1`` on every nonzero
    pattern, realized as ``Z`` on the control times a phase flip of ``|0..0>``."""
    flip0 = ControlledGate((control,) + tuple(wires[:-1]),
                           SingleQubitGate(wires[-1], np.diag([-1.0, 1.0])),
                           (1,) + (0,) * (len(wires) - 1))
    return Composite((SingleQubitGate(control, Z), flip0))


def _hadamards(wires) -> Composite:
    return Composite(tuple(SingleQubitGate(w, H) for w in wires))


def _phase_schedule(t: int, phase0: int):
    """Control wire of every Grover step, ``2^j`` steps for bit ``j``."""
    sched = []
    for j in range(t):
        sched.extend([phase0 + t - 1 - j] * (1 << j))
    return sched


def _phase_out(t: int, m_low: int, signed: bool):
    D = 1 << t

    def out_batch(idx):
        y = (np.asarray(idx) >> m_low) & (D - 1)
        v = np.sin(np.pi * y / D) ** 2
        return 2 * v - 1 if signed else v

    return (lambda ell: float(out_batch(np.array([ell]))[0])), out_batch


def build_counting_alg(f: TabFn, t: int, cap: int = DEFAULT_QUBIT_CAP) -> QAlg:
    """Quantum counting for Boolean ``f`` on ``N = 2^r`` points; estimates
    the fraction of ones with ``2^t - 1`` queries."""
    r = _log2_exact(f.N)
    vals = f.scalar_values
    if not np.all((vals == 0) | (vals == 1)):
        raise DomainError("counting needs a {0, 1}-valued function")
    if t < 1:
        raise DomainError("need at least one phase qubit")
    m = r + 1 + t
    if m > cap:
        raise ResourceError(f"counting needs m={m} qubits, cap is {cap}")
    idx_w = tuple(range(r))
    xw = r
    ph0 = r + 1
    query = QueryDef(m, r, 1, range(1 << r), list(range(1 << r)),
                     lambda v: int(round(float(v[0]))))

    def cz(c):
        return ControlledGate((c,), SingleQubitGate(xw, Z))

    def tail(c):
        # rest of one controlled Grover step after its query
        return [cz(c), _hadamards(idx_w), _reflect_zero(idx_w, c), _hadamards(idx_w)]

    sched = _phase_schedule(t, ph0)
    prep = [_hadamards(idx_w), SingleQubitGate(xw, H), _hadamards(range(ph0, ph0 + t))]
    us = [Composite(tuple(prep + [cz(sched[0])]))]
    for s, c in enumerate(sched):
        parts = tail(c)
        if s + 1 < len(sched):
            parts.append(cz(sched[s + 1]))
        else:
            parts.append(InverseQFT(ph0, ph0 + t))
        us.append(Composite(tuple(parts)))
    out, out_batch = _phase_out(t, 0, False)
    return QAlg(query, tuple(us), 0, out, out_batch)


def _negate(m: int, lo: int, width: int):
    mask = (1 << width) - 1

    def neg(idx):
        x = (idx >> lo) & mask
        return idx + ((((-x) & mask) - x) << lo)

    return BasisPermutation(func=neg, inverse=neg)


def build_mean_alg(f: TabFn, t: int, m_star: int, signed: bool = False,
                   cap: int = DEFAULT_QUBIT_CAP) -> QAlg:
    """Amplitude estimation of the mean of a bounded scalar ``f``.

    Values are clamped to ``[0, 1]`` (``[-1, 1]`` when ``signed``) and
    discretized with ``m_star`` bits; the estimate targets the mean of the
    discretized values. Uses ``2 + 4 (2^t - 1)`` queries.
    """
    r = _log2_exact(f.N)
    if t < 1 or m_star < 1:
        raise DomainError("need t >= 1 and m* >= 1")
    m = r + m_star + 1 + t
    if m > cap:
        raise ResourceError(f"mean estimation needs m={m} qubits, cap is {cap}")
    idx_w = tuple(range(r))
    x_w = tuple(range(r, r + m_star))
    anc = r + m_star
    ph0 = anc + 1
    lo = m - r - m_star
    lo_clip = -1.0 if signed else 0.0

    def beta(v):
        return int(beta_discretize(min(max(float(v[0]), lo_clip), 1.0), m_star))

    query = QueryDef(m, r, m_star, range(1 << r), list(range(1 << r)), beta)
    g = gamma_undiscretize(np.arange(1 << m_star), m_star)
    prob = (g + 1) / 2 if signed else np.clip(g, 0.0, 1.0)
    rot = UniformlyControlledGate(x_w, anc,
                                  np.array([ry(2 * math.asin(math.sqrt(v))) for v in prob]))
    neg = _negate(m, lo, m_star)
    Q = None  # marks a query slot

    # A = H^r, Q, ROT, NEG, Q;  A^dagger = NEG, Q, ROT^dagger, NEG, Q, NEG, H^r
    A = [_hadamards(idx_w), Q, rot, neg, Q]
    A_dag = [neg, Q, rot.adjoint(), neg, Q, neg, _hadamards(idx_w)]
    a_wires = idx_w + x_w + (anc,)
    sched = _phase_schedule(t, ph0)
    ops = [_hadamards(range(ph0, ph0 + t))] + A
    for c in sched:
        ops += [ControlledGate((c,), SingleQubitGate(anc, Z))]
        ops += A_dag
        ops += [_reflect_zero(a_wires, c)]
        ops += A
    ops.append(InverseQFT(ph0, ph0 + t))

    us, cur = [], []
    for op in ops:
        if op is Q:
            us.append(Composite(tuple(cur)))
            cur = []
        else:
            cur.append(op)
    us.append(Composite(tuple(cur)))
    out, out_batch = _phase_out(t, 0, signed)
    return QAlg(query, tuple(us), 0, out, out_batch)


def discretized_mean(f: TabFn, m_star: int, signed: bool = False) -> float:
    """Mean of ``gamma(beta(f))`` after clamping, the quantity estimated by
    :func:`build_mean_alg`."""
    v = np.clip(f.scalar_values, -1.0 if signed else 0.0, 1.0)
    return float(gamma_undiscretize(beta_discretize(v, m_star), m_star).mean())
