import itertools
import math

import numpy as np
import pytest

from vecmean import dist
from vecmean.errors import DimensionMismatchError, DomainError, ResourceError
from vecmean.experiments import random_restricted
from vecmean.randomized import (MCSampler, RestrictedRandAlg, chebyshev_mass, mc_many_sums,
                                mc_mean, output_distribution, ran_error, ran_error_detail,
                                run_restricted)
from vecmean.spaces import INF, LpSpec, TabFn, many_sums_T, mean_S_N


def S(f):
    return mean_S_N(f).coords


def test_weights_validated():
    with pytest.raises(DomainError):
        RestrictedRandAlg([0.5, 0.6], np.zeros((2, 1)), lambda w, v: 0)
    with pytest.raises(DomainError):
        RestrictedRandAlg([1.0, 0.0], np.zeros((2, 1)), lambda w, v: 0)
    with pytest.raises(DimensionMismatchError):
        RestrictedRandAlg([1.0], np.zeros((2, 1)), lambda w, v: 0)


def test_n_zero_is_constant():
    a = RestrictedRandAlg.from_branches([(0.25, [], lambda v: np.array([1.0, 2.0])),
                                         (0.75, [], lambda v: np.array([3.0, 4.0]))])
    f = TabFn(np.ones((3, 2)), LpSpec(2, 2))
    assert np.array_equal(run_restricted(a, f, omega=1), [3.0, 4.0])
    d = output_distribution(a, f)
    assert [p for _, p in d] == pytest.approx([0.25, 0.75])


def test_single_branch_average():
    a = RestrictedRandAlg.from_branches([(1.0, [0, 2, 2], lambda v: v.mean(axis=0))])
    f = TabFn.scalar([0.3, 9.0, -0.6])
    assert run_restricted(a, f, seed=1)[0] == pytest.approx((0.3 - 1.2) / 3)


def test_node_out_of_range():
    a = RestrictedRandAlg.from_branches([(1.0, [5], lambda v: v[0])])
    with pytest.raises(DomainError):
        run_restricted(a, TabFn.scalar([0, 1]), omega=0)


def test_two_branch_frequencies():
    a = RestrictedRandAlg.from_branches([(1 / 3, [0], lambda v: 0.0), (2 / 3, [1], lambda v: 1.0)])
    f = TabFn.scalar([0, 1])
    rng = np.random.default_rng(0)
    k = sum(run_restricted(a, f, seed=rng) == 0.0 for _ in range(10 ** 4))
    assert abs(k - 10 ** 4 / 3) <= 3 * math.sqrt(10 ** 4 * 2 / 9)


def test_ran_error_examples():
    f = TabFn.scalar([0.2, 0.6])
    exact = RestrictedRandAlg.from_branches([(1.0, [0, 1], lambda v: v.mean(axis=0))])
    assert ran_error(exact, S, [f]) == 0.0
    half = RestrictedRandAlg.from_branches([(0.5, [], lambda v: np.array([0.4])),
                                            (0.5, [], lambda v: np.array([1.4]))])
    assert ran_error(half, S, [f]) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        ran_error(exact, S, [])


def test_ran_error_exact_vs_sampled():
    rng = np.random.default_rng(1)
    f = TabFn(rng.uniform(-1, 1, (6, 3)), LpSpec(2, 3))
    a = mc_mean(6, 3, "explicit")
    ex = ran_error_detail(a, S, [f])
    sm = ran_error_detail(a, S, [f], exact_limit=10, samples=20000, seed=3)
    assert ex.exact and not sm.exact
    assert abs(ex.value - sm.value) <= sm.halfwidth


def test_mc_constant_has_zero_error():
    f = TabFn(np.tile([0.25, -0.5], (8, 1)), LpSpec(INF, 2))
    assert ran_error(mc_mean(8, 2, "explicit"), S, [f]) == 0.0
    assert np.array_equal(mc_mean(8, 5)(f, seed=0).coords, [0.25, -0.5])


def test_explicit_mc_shape():
    a = mc_mean(4, 2, "explicit")
    assert a.size == 16 and np.allclose(a.weights, 1 / 16)
    with pytest.raises(ResourceError):
        mc_mean(100, 4, "explicit")


def test_explicit_mc_unbiased():
    rng = np.random.default_rng(2)
    for N, n in [(3, 1), (4, 2), (5, 3)]:
        f = TabFn(rng.uniform(-1, 1, (N, 2)), LpSpec(1, 2))
        a = mc_mean(N, n, "explicit")
        mean = sum(p * np.asarray(v) for v, p in output_distribution(a, f))
        assert np.abs(mean - S(f)).max() <= 1e-12


def test_explicit_matches_sampler():
    rng = np.random.default_rng(3)
    f = TabFn.scalar(rng.integers(0, 3, 4).astype(float))
    exact = output_distribution(mc_mean(4, 2, "explicit"), f)
    draws = mc_mean(4, 2).estimates(f, 10 ** 4, seed=4)[:, 0]
    vals, counts = np.unique(np.round(draws, 12), return_counts=True)
    emp = dist.group([np.array([v]) for v in vals], counts / 10 ** 4)
    tv = dist.total_variation(emp, exact)
    # 5 sigma band on the summed absolute deviations
    band = 5 * sum(math.sqrt(p * (1 - p) / 10 ** 4) for _, p in exact) / 2
    assert tv < band


def test_sampler_checks_domain():
    with pytest.raises(DimensionMismatchError):
        MCSampler(4, 2)(TabFn.scalar([1.0, 2.0]))


def test_mc_scalar_rate():
    N = 2 ** 13
    rng = np.random.default_rng(5)
    f = TabFn.scalar(rng.choice([-1.0, 1.0], N))
    ns = [2 ** k for k in range(4, 13, 2)]
    errs = [math.sqrt(np.mean((mc_mean(N, n).estimates(f, 400, seed=k)[:, 0] - S(f)[0]) ** 2))
            for k, n in enumerate(ns)]
    slope = np.polyfit(np.log2(ns), np.log2(errs), 1)[0]
    assert -0.6 <= slope <= -0.4


def test_many_sums_uses_n_values():
    rng = np.random.default_rng(6)
    a = TabFn(rng.normal(size=(10, 5)), LpSpec(2, 5))
    calls = []

    class Counting(TabFn):
        def evaluate(self, idx):
            calls.append(len(np.atleast_1d(idx)))
            return super().evaluate(idx)

    f = Counting(rng.uniform(-1, 1, (10, 1)), LpSpec(INF, 1))
    mc_many_sums(a, f, 7, seed=1)
    assert calls == [7]


def test_many_sums_degenerate_cases():
    rng = np.random.default_rng(7)
    f = TabFn.scalar(rng.uniform(-1, 1, 16))
    one = TabFn(np.ones((16, 1)), LpSpec(INF, 1))
    assert mc_many_sums(one, f, 9, seed=8).coords[0] == pytest.approx(mc_mean(16, 9)(f, seed=8).coords[0])
    ones = TabFn(np.ones((16, 4)), LpSpec(INF, 4))
    est = mc_many_sums(ones, f, 9, seed=8).coords
    assert np.allclose(est, est[0])
    with pytest.raises(DimensionMismatchError):
        mc_many_sums(ones, TabFn.scalar(np.ones(3)), 2)


def test_many_sums_unbiased_exact():
    rng = np.random.default_rng(9)
    a = TabFn(rng.uniform(-1, 1, (3, 2)), LpSpec(2, 2))
    f = TabFn.scalar(rng.uniform(-1, 1, 3))
    total = np.zeros(2)
    for xi in itertools.product(range(3), repeat=2):
        xi = np.array(xi)
        total += f.scalar_values[xi] @ a.values[xi] / 2
    assert np.allclose(total / 9, many_sums_T(a, f).coords, atol=1e-14)


def test_chebyshev_mass_random():
    rng = np.random.default_rng(10)
    for _ in range(20):
        alg = random_restricted(rng, 5, 2, int(rng.integers(1, 9)), 2)
        f = TabFn(rng.uniform(-1, 1, (5, 2)), LpSpec(2, 2))
        assert chebyshev_mass(alg, f, S) >= 0.75
