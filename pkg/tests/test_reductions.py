import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vecmean.errors import DimensionMismatchError, DomainError
from vecmean.reductions import (T_unitvec_identity_gap, WT_walsh_identity_gap, beta_discretize,
                                embed_J, embed_JP, fwht, gamma_undiscretize,
                                instance_unit_vectors, instance_walsh, lam, lift_Va_Gamma,
                                project_P, theoretical_rate, tile, tile_factor, walsh_apply,
                                walsh_matrix, walsh_square_deviation)
from vecmean.spaces import INF, LpSpec, TabFn, VecX, many_sums_T, mean_S_N, norm

PS = [1.0, 1.5, 2.0, 3.0, INF]


def test_discretize_examples():
    assert beta_discretize(-1.0, 5) == 0 and beta_discretize(-3.0, 5) == 0
    assert gamma_undiscretize(0, 5) == -1.0
    assert beta_discretize(1.0, 4) == 15 and beta_discretize(2.5, 4) == 15
    assert beta_discretize(0.0, 2) == 2 and gamma_undiscretize(2, 2) == 0.0


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 1), st.integers(1, 20))
def test_sandwich(z, m):
    g = float(gamma_undiscretize(beta_discretize(z, m), m))
    assert -1 <= g <= z <= g + 2.0 ** (1 - m) <= 1


def test_sandwich_bulk():
    rng = np.random.default_rng(0)
    z = rng.uniform(-1, 1, 10 ** 4)
    ms = rng.integers(1, 21, 10 ** 4)
    for m in range(1, 21):
        zz = z[ms == m]
        g = gamma_undiscretize(beta_discretize(zz, m), m)
        step = 2.0 ** (1 - m)
        assert np.all(-1 <= g) and np.all(g <= zz) and np.all(zz <= g + step) and np.all(g + step <= 1)


def test_lift_examples():
    rng = np.random.default_rng(1)
    a = TabFn(rng.uniform(-1, 1, (16, 8)), LpSpec(2, 8))
    V, G = lift_Va_Gamma(a, TabFn.scalar(np.zeros(16)), 6)
    assert np.all(V.values == 0)
    on_grid = TabFn.scalar(gamma_undiscretize(rng.integers(0, 2 ** 6, 16), 6))
    V, G = lift_Va_Gamma(a, on_grid, 6)
    assert np.array_equal(V.values, G.values)
    f = TabFn.scalar(rng.uniform(-1, 1, 16))
    V, G = lift_Va_Gamma(a, f, 10)
    assert np.allclose(mean_S_N(V).coords, many_sums_T(a, f).coords, atol=1e-15)
    assert a.space.norm(many_sums_T(a, f).coords - mean_S_N(G).coords) <= 2.0 ** -9


def test_lift_ball_check():
    a = TabFn(np.full((2, 1), 1.5), LpSpec(2, 1))
    with pytest.raises(DomainError):
        lift_Va_Gamma(a, TabFn.scalar([0, 0]), 4)
    with pytest.raises(DimensionMismatchError):
        lift_Va_Gamma(TabFn(np.zeros((3, 1)), LpSpec(2, 1)), TabFn.scalar([0, 0]), 4)


def test_tile_factors():
    assert tile_factor(5, 5) == 1.0
    assert tile_factor(5, 10) == 1.0
    assert tile_factor(5, 11) == pytest.approx(10 / 11)
    with pytest.raises(DomainError):
        tile(TabFn.scalar(np.ones(4)), 3)


def test_tile_identity_random():
    rng = np.random.default_rng(2)
    for _ in range(100):
        N1 = int(rng.integers(1, 12))
        N = int(rng.integers(N1, 4 * N1 + 3))
        a = TabFn(rng.uniform(-1, 1, (N1, 3)), LpSpec(1.5, 3))
        f = TabFn.scalar(rng.uniform(-1, 1, N1))
        at, lift = tile(a, N)
        if N == N1:
            assert np.array_equal(at.values, a.values)
        gap = many_sums_T(at, lift(f)).coords - tile_factor(N1, N) * many_sums_T(a, f).coords
        assert np.abs(gap).max() <= 1e-12


def test_JP_example():
    Jg, P = embed_JP(np.array([3.0]), 2, p=1)
    assert np.array_equal(Jg, [6.0, 0.0])
    assert norm(Jg, 1) == 3.0
    assert np.array_equal(P(Jg), [3.0])
    g = VecX([0.5, -2.0], LpSpec(3, 2))
    Jg, P = embed_JP(g, 2)
    assert np.array_equal(Jg, g.coords)
    with pytest.raises(DomainError):
        embed_J(np.ones(3), 2, 2)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(PS), st.integers(1, 8), st.integers(0, 16), st.integers(0, 2 ** 31))
def test_JP_properties(p, M1, extra, seed):
    rng = np.random.default_rng(seed)
    M = M1 + extra
    g = rng.normal(size=M1)
    h = rng.normal(size=M)
    Jg = embed_J(g, M, p)
    assert abs(norm(Jg, p) - norm(g, p)) <= 1e-12 * max(1.0, norm(g, p))
    assert np.abs(project_P(Jg, M1, p) - g).max() <= 1e-14 * max(1.0, np.abs(g).max())
    assert norm(project_P(h, M1, p), p) <= norm(h, p) + 1e-12


def test_walsh_matrix_properties():
    assert walsh_matrix(1).tolist() == [[1, 1], [1, -1]]
    for k in range(9):
        W = walsh_matrix(k)
        assert np.array_equal(W, W.T)
        assert set(np.unique(W)) <= {-1, 1}
        assert walsh_square_deviation(W) == 0
    bad = walsh_matrix(3).copy()
    bad[2, 5] += 1
    assert walsh_square_deviation(bad) > 0
    with pytest.raises(DomainError):
        walsh_matrix(11)


def test_walsh_norm_scaling_and_fwht():
    rng = np.random.default_rng(3)
    for k in (2, 5, 8):
        N1 = 2 ** k
        f = rng.normal(size=(4, N1))
        Wf = walsh_apply(f, k)
        assert np.allclose(norm(Wf, 2), math.sqrt(N1) * norm(f, 2), rtol=1e-12)
        assert np.allclose(fwht(f), Wf, atol=1e-9)
    f = rng.normal(size=2 ** 12)
    # matrix-free path beyond the dense limit
    assert np.allclose(walsh_apply(walsh_apply(f)), 2 ** 12 * f, atol=1e-7)


def test_instance_norms():
    for p in PS:
        a = instance_unit_vectors(p, 8)
        assert np.allclose(a.space.norm(a.values, axis=1), 1.0)
        w = instance_walsh(3, p)
        assert np.allclose(w.space.norm(w.values, axis=1), 1.0)
    assert np.array_equal(instance_unit_vectors(1, 4).values, 4 * np.eye(4))


def test_instance_identities():
    rng = np.random.default_rng(4)
    e0 = TabFn.scalar([1.0, 0, 0, 0])
    assert np.array_equal(many_sums_T(instance_unit_vectors(1, 4), e0).coords, [1.0, 0, 0, 0])
    for _ in range(100):
        p = PS[int(rng.integers(0, 5))]
        k = int(rng.integers(1, 8))
        f = TabFn.scalar(rng.uniform(-1, 1, 2 ** k))
        assert T_unitvec_identity_gap(p, f) <= 1e-12
        assert WT_walsh_identity_gap(k, f) <= 1e-9
    f = TabFn.scalar(rng.uniform(-1, 1, 64))
    assert WT_walsh_identity_gap(6, f) <= 1e-9


def test_theoretical_rates():
    assert theoretical_rate("q", "scalar", n=100) == pytest.approx(0.01)
    assert theoretical_rate("ran", "vector", p=3, M=10, n=100) == pytest.approx(0.1)
    for n in (1, 10, 1000):
        assert theoretical_rate("ran", "vector", p=1, M=5, n=n) == 1.0
        assert theoretical_rate("q", "vector", p=1, M=5, n=n) == 1.0
    assert theoretical_rate("ran", "vector", p=INF, M=3, n=4, bound="upper") == pytest.approx(0.5 * math.sqrt(2))
    assert theoretical_rate("ran", "vector", p=1.5, M=3, n=16) == pytest.approx(16 ** (-1 / 3))


def test_lambda():
    N = 2 ** 16
    assert lam(N) == pytest.approx(4 ** -1.5 / 2)
    with pytest.raises(DomainError):
        lam(4)
    with pytest.raises(DomainError):
        theoretical_rate("q", "vector", p=2, M=4, n=3, bound="lower")
    assert theoretical_rate("q", "vector", p=2, M=4, n=N, bound="lower") == pytest.approx(N ** -0.5 * lam(N))
