import math

import numpy as np
import pytest

from vecmean.errors import ContractError, DimensionMismatchError, DomainError, ResourceError
from vecmean.experiments import random_gate, random_state
from vecmean.qsim import (H, BasisPermutation, Composite, ControlledGate, InverseQFT,
                          PreparedColumn, QAlg, QState, QueryDef, SingleQubitGate,
                          UniformlyControlledGate, apply_query, apply_unitary, quantum_error,
                          run_exact, run_sample, ry)
from vecmean.spaces import TabFn

BIT = TabFn.scalar([0.0, 1.0, 1.0, 0.0])


def bit_query(m=4, Z=range(4)):
    # wires: index 2, value 1, spare 1
    return QueryDef(m, 2, 1, Z, lambda i: i, lambda v: int(v[0]))


def dense_gate(u, m):
    """Dense matrix of a UnitarySpec by acting on every basis state."""
    D = 1 << m
    out = np.zeros((D, D), dtype=complex)
    for b in range(D):
        idx, amps = u.act(m, np.array([b]), np.array([1.0 + 0j]))
        out[idx, b] = amps
    return out


def test_qstate_validation():
    with pytest.raises(DomainError):
        QState(2, np.array([0, 1]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError):
        QState(1, np.array([2]), np.array([1.0]))
    s = QState.from_dict(3, {5: 0.6, 2: 0.8j})
    assert s.to_dict() == pytest.approx({2: 0.8j, 5: 0.6})
    assert np.allclose(QState.from_dense(s.dense()).dense(), s.dense())


def test_empty_Z_is_identity():
    rng = np.random.default_rng(0)
    s = random_state(rng, 4)
    t = apply_query(bit_query(Z=[]), BIT, s)
    assert np.array_equal(t.idx, s.idx) and np.array_equal(t.amps, s.amps)


def test_query_writes_value_on_basis_state():
    q = QueryDef(5, 2, 2, range(4), lambda i: 3 - i, lambda v: int(v[0]))
    f = TabFn.scalar([0, 1, 2, 3])
    for i in range(4):
        for y in range(2):
            s = QState.basis(5, (i << 3) | y)
            t = apply_query(q, f, s)
            assert t.idx.tolist() == [(i << 3) | ((3 - i) << 1) | y]


def test_query_adds_mod_two_power():
    q = QueryDef(4, 2, 2, range(4), lambda i: i, lambda v: int(v[0]))
    f = TabFn.scalar([3, 3, 3, 3])
    t = apply_query(q, f, QState.basis(4, 0b0110))
    assert t.idx.tolist() == [0b0101]


def test_phase_kickback():
    q = bit_query(3)
    # index register |01> with wire layout [i1 i0 x]: i = 1 has f = 1
    minus = QState.from_dict(3, {(1 << 1) | 0: 1 / math.sqrt(2), (1 << 1) | 1: -1 / math.sqrt(2)})
    t = apply_query(q, BIT, minus)
    assert np.allclose(t.dense(), -minus.dense())
    zero_branch = QState.from_dict(3, {0: 1 / math.sqrt(2), 1: -1 / math.sqrt(2)})
    assert np.allclose(apply_query(q, BIT, zero_branch).dense(), zero_branch.dense())


def test_query_errors():
    with pytest.raises(DimensionMismatchError):
        apply_query(bit_query(4), BIT, QState.basis(3, 0))
    q = QueryDef(4, 2, 1, range(4), lambda i: i + 3, lambda v: 0)
    with pytest.raises(DomainError):
        apply_query(q, BIT, QState.basis(4, 0))
    with pytest.raises(DomainError):
        QueryDef(3, 2, 2, [0], [0], lambda v: 0)


def test_double_query_identity_random_states():
    rng = np.random.default_rng(1)
    f = TabFn.scalar(rng.integers(0, 2, 8).astype(float))
    q = QueryDef(5, 3, 1, [0, 2, 3, 7], lambda i: i, lambda v: int(v[0]))
    for _ in range(50):
        s = random_state(rng, 5, int(rng.integers(1, 32)))
        t = apply_query(q, f, apply_query(q, f, s))
        assert np.array_equal(t.idx, s.idx) and np.array_equal(t.amps, s.amps)


def test_unitary_examples():
    s = QState.basis(1, 0)
    t = apply_unitary(SingleQubitGate(0, H), s)
    assert np.allclose(t.dense(), [1 / math.sqrt(2)] * 2)
    rng = np.random.default_rng(2)
    r = random_state(rng, 3)
    same = apply_unitary(BasisPermutation.identity(), r)
    assert np.allclose(same.dense(), r.dense())
    col = PreparedColumn(0, {0b101: math.sqrt(1 / 3), 0b110: math.sqrt(2 / 3)})
    out = apply_unitary(col, QState.basis(3, 0))
    assert out.to_dict() == pytest.approx({5: math.sqrt(1 / 3), 6: math.sqrt(2 / 3)})


def test_prepared_column_contract():
    col = PreparedColumn(0, {1: 1.0})
    with pytest.raises(ContractError):
        apply_unitary(col, QState.basis(2, 1))
    with pytest.raises(ContractError):
        PreparedColumn(0, {1: 0.5})


def test_gate_validation():
    with pytest.raises(ContractError):
        SingleQubitGate(0, np.array([[1, 1], [0, 1]]))
    with pytest.raises(ContractError):
        BasisPermutation(table=[0, 0, 1, 2])


def test_wire_zero_is_most_significant():
    X = np.array([[0, 1], [1, 0]])
    t = apply_unitary(SingleQubitGate(0, X), QState.basis(3, 0))
    assert t.idx.tolist() == [0b100]


def test_controlled_gate_matches_dense_kron():
    m = 2
    U = ry(0.7)
    cg = ControlledGate((0,), SingleQubitGate(1, U))
    P0, P1 = np.diag([1, 0]), np.diag([0, 1])
    assert np.allclose(dense_gate(cg, m), np.kron(P0, np.eye(2)) + np.kron(P1, U))
    neg = ControlledGate((0,), SingleQubitGate(1, U), (0,))
    assert np.allclose(dense_gate(neg, m), np.kron(P1, np.eye(2)) + np.kron(P0, U))


def test_uniformly_controlled_gate():
    mats = np.array([ry(a) for a in (0.1, 0.5, 0.9, 1.3)])
    g = UniformlyControlledGate((0, 1), 2, mats)
    D = dense_gate(g, 3)
    for c in range(4):
        assert np.allclose(D[2 * c:2 * c + 2, 2 * c:2 * c + 2], mats[c])
    assert np.allclose(dense_gate(g.adjoint(), 3), D.conj().T)


def test_inverse_qft_dense():
    m = 3
    D = dense_gate(InverseQFT(0, 3), m)
    n = 1 << m
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ref = np.exp(-2j * np.pi * j * k / n) / math.sqrt(n)
    assert np.allclose(D, ref)
    sub = dense_gate(InverseQFT(1, 3), m)
    assert np.allclose(sub, np.kron(np.eye(2), dense_gate(InverseQFT(0, 2), 2)))


def test_composite_order_and_adjoint():
    rng = np.random.default_rng(3)
    parts = tuple(random_gate(rng, 3) for _ in range(6))
    c = Composite(parts)
    D = np.eye(8, dtype=complex)
    for p in parts:
        D = dense_gate(p, 3) @ D
    assert np.allclose(dense_gate(c, 3), D)
    assert np.allclose(dense_gate(c.adjoint(), 3), D.conj().T)


def test_random_gates_are_unitary():
    rng = np.random.default_rng(4)
    for _ in range(40):
        D = dense_gate(random_gate(rng, 3), 3)
        assert np.allclose(D.conj().T @ D, np.eye(8), atol=1e-12)


def _third_alg():
    # final state sqrt(1/3)|1> + sqrt(2/3)|2>
    q = QueryDef(2, 1, 1, [], [], lambda v: 0)
    u0 = PreparedColumn(0, {1: math.sqrt(1 / 3), 2: math.sqrt(2 / 3)})
    return QAlg(q, (u0,), 0, lambda ell: float(ell))


def test_run_exact_examples():
    q = QueryDef(2, 1, 1, [], [], lambda v: 0)
    alg = QAlg(q, (BasisPermutation.identity(),), 0, lambda ell: 7.5)
    assert run_exact(alg, BIT) == [(7.5, 1.0)]
    alg = QAlg(q, (BasisPermutation(table=[3, 2, 1, 0]),), 0, lambda ell: ell * 10)
    assert run_exact(alg, BIT) == [(30, 1.0)]
    d = run_exact(_third_alg(), BIT)
    assert [v for v, _ in d] == [1.0, 2.0]
    assert [p for _, p in d] == pytest.approx([1 / 3, 2 / 3], abs=1e-12)
    assert sum(p for _, p in d) == pytest.approx(1.0, abs=1e-9)


def test_run_exact_cap():
    q = QueryDef(5, 1, 1, [], [], lambda v: 0)
    alg = QAlg(q, (BasisPermutation.identity(),), 0, lambda ell: 0)
    with pytest.raises(ResourceError):
        run_exact(alg, BIT, cap=4)


def test_run_sample_frequencies():
    alg = _third_alg()
    rng = np.random.default_rng(5)
    draws = [run_sample(alg, BIT, rng) for _ in range(10 ** 4)]
    k = sum(d == 1.0 for d in draws)
    sigma = math.sqrt(10 ** 4 * (1 / 3) * (2 / 3))
    assert abs(k - 10 ** 4 / 3) <= 3 * sigma
    assert run_sample(alg, BIT, 42) == run_sample(alg, BIT, 42)


def test_run_sample_deterministic_output():
    q = QueryDef(2, 1, 1, [], [], lambda v: 0)
    alg = QAlg(q, (BasisPermutation.identity(),), 0, lambda ell: "g")
    assert {run_sample(alg, BIT, s) for s in range(20)} == {"g"}


def _dist_alg(probs_errors):
    # outputs error value e with probability p, solution is 0
    target = {k: math.sqrt(p) for k, (p, _) in enumerate(probs_errors)}
    q = QueryDef(2, 1, 1, [], [], lambda v: 0)
    return QAlg(q, (PreparedColumn(0, target),), 0, lambda ell: probs_errors[ell][1])


def test_quantum_error_examples():
    sol = lambda f: 0.0  # noqa: E731
    assert quantum_error(_dist_alg([(0.8, 0.0), (0.2, 1.0)]), sol, [BIT]) == 0.0
    assert quantum_error(_dist_alg([(0.5, 0.0), (0.5, 1.0)]), sol, [BIT]) == 1.0
    exact = _dist_alg([(1.0, 0.0)])
    assert quantum_error(exact, sol, [BIT]) == 0.0
    with pytest.raises(DomainError):
        quantum_error(exact, sol, [])
