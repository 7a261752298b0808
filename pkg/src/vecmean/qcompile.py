"""Compile restricted randomized algorithms into quantum query algorithms.

The compiled algorithm uses one query per classical function value. Its
register is ``|i>|w>|z_1>...|z_n>``: a countdown ``i`` over the node
positions, the branch label ``w`` and ``n`` value slots of ``m''`` qubits each.
``U_0`` prepares ``sum_w sqrt(P(w)) |n-1>|w>|0..0>``; each query writes the
encoded value of ``f(t_{i+1}^w)`` into ``z_1``; ``U_1 .. U_{n-1}`` count ``i``
down and move ``z_1`` into its final slot. Measuring and decoding the slots
reproduces the classical output distribution on ``theta o f``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import dist
from .errors import ContractError, ResourceError
from .qsim import (DEFAULT_QUBIT_CAP, BasisPermutation, Composite, PreparedColumn,
                   QAlg, QueryDef, quantum_error, run_exact)
from .randomized import RestrictedRandAlg, output_distribution, ran_error
from .spaces import LpSpec, TabFn

DIST_TOL = 1e-9


def _bits(count: int) -> int:
    """Smallest positive width holding ``count`` distinct codes."""
    return max(1, math.ceil(math.log2(max(count, 2))))


@dataclass(frozen=True, eq=False)
class FiniteMap:
    """A map ``K -> K`` together with an enumeration of its (finite) image."""

    func: Callable[[np.ndarray], np.ndarray]
    image: tuple

    def __post_init__(self):
        object.__setattr__(self, "image",
                           tuple(np.atleast_1d(np.asarray(v, dtype=float)) for v in self.image))

    def __call__(self, x) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float))

    def apply(self, f: TabFn) -> TabFn:
        """``theta o f``."""
        return f.map(self)


@dataclass(frozen=True, eq=False)
class ThetaNet(FiniteMap):
    """Radial clamp onto the unit ball followed by truncation to the grid
    ``(1/k) Z^M``; maps the ball of ``space`` into itself."""

    space: LpSpec | None = None
    k: int = 1


def make_theta_net(space: LpSpec, k: int, enumerate_image: bool = True) -> ThetaNet:
    """A finite ``(1/k)``-net map for the unit ball of ``space``.

    Every coordinate moves by less than ``1/k``, so ``||x - theta(x)|| <= 1/k``
    in the normalized norm for all p. The image lists all grid points of the
    ball; pass ``enumerate_image=False`` when it would be too large.
    """
    if k < 1:
        raise ValueError("k must be at least 1")

    def theta(x):
        x = np.asarray(x, dtype=float)
        r = float(space.norm(x))
        if r > 1:
            x = x / r
        # rounding to 10 decimals keeps grid points fixed despite x * k noise
        return np.trunc(np.round(x * k, 10)) / k

    image: list = []
    if enumerate_image:
        # normalized balls reach coordinates up to M^(1/p)
        reach = 1.0 if space.p == math.inf else space.M ** (1.0 / space.p)
        K = int(math.floor(k * reach + 1e-9))
        axis = np.arange(-K, K + 1)
        if axis.size ** space.M > 1 << 20:
            raise ResourceError("net image too large to enumerate")
        for pt in itertools.product(axis, repeat=space.M):
            g = np.array(pt, dtype=float) / k
            if space.norm(g) <= 1 + 1e-12:
                image.append(g)
    return ThetaNet(theta, tuple(image), space, k)


@dataclass(frozen=True, eq=False)
class CompiledLayout:
    n: int
    omega_size: int
    m_count: int   # m'_1
    m_branch: int  # m'_2
    m_value: int   # m''
    m: int

    def index(self, i: int, w: int, zs: Sequence[int] = ()) -> int:
        ell = (i << self.m_branch) | w
        for s in range(max(self.n, 1)):
            ell = (ell << self.m_value) | (zs[s] if s < len(zs) else 0)
        return ell

    def split(self, ell: int) -> tuple[int, int, list[int]]:
        slots = max(self.n, 1)
        mask = (1 << self.m_value) - 1
        zs = [(ell >> (self.m_value * (slots - 1 - s))) & mask for s in range(slots)]
        head = ell >> (self.m_value * slots)
        return head >> self.m_branch, head & ((1 << self.m_branch) - 1), zs[: self.n]


def _shuffle(layout: CompiledLayout, target_slot: int):
    """Decrement the countdown register and swap slot 1 with ``target_slot``
    (slots numbered from 1). Returns vectorized forward and inverse maps."""
    mv, slots = layout.m_value, max(layout.n, 1)
    vmask = (1 << mv) - 1
    s1 = mv * (slots - 1)
    st = mv * (slots - target_slot)
    cshift = layout.m_branch + mv * slots
    cmask = (1 << layout.m_count) - 1

    def swap(idx):
        a = (idx >> s1) & vmask
        b = (idx >> st) & vmask
        return idx + ((b - a) << s1) + ((a - b) << st)

    def count(idx, delta):
        c = (idx >> cshift) & cmask
        c2 = (c + delta) & cmask
        return idx + ((c2 - c) << cshift)

    return (lambda idx: swap(count(idx, -1)),
            lambda idx: count(swap(idx), +1))


def compile_restricted(a: RestrictedRandAlg, theta: FiniteMap, zero: Any = None,
                       cap: int = DEFAULT_QUBIT_CAP, extra_width: int = 0) -> QAlg:
    """Quantum algorithm with ``a.n`` queries whose output distribution on
    ``f`` equals that of ``a`` on ``theta o f``.

    ``zero`` is returned for measured branch labels outside Omega (never
    reached); ``extra_width`` widens every register for testing.
    """
    if not isinstance(theta, FiniteMap) or not theta.image:
        raise ContractError("theta must enumerate its finite image")
    n, size = a.n, a.size
    codes: dict[tuple, int] = {}
    for v in theta.image:
        codes.setdefault(tuple(v.tolist()), len(codes))
    image = [np.array(k) for k in codes]
    keys = np.array(list(codes), dtype=float)

    layout = CompiledLayout(
        n, size,
        _bits(n) + extra_width, _bits(size) + extra_width, _bits(len(codes)) + extra_width,
        0)
    m_prime = layout.m_count + layout.m_branch
    m = m_prime + max(n, 1) * layout.m_value
    layout = CompiledLayout(n, size, layout.m_count, layout.m_branch, layout.m_value, m)
    if m > cap:
        raise ResourceError(f"compiled algorithm needs m={m} qubits, cap is {cap}")

    def sigma(y) -> int:
        key = tuple(np.atleast_1d(np.asarray(y, dtype=float)).tolist())
        if key in codes:
            return codes[key]
        d = np.abs(keys - np.asarray(key)).max(axis=1)
        j = int(np.argmin(d))
        if d[j] > 1e-9:
            raise ContractError(f"theta produced {key}, which is not in its image")
        return j

    def beta(x) -> int:
        return sigma(theta(x))

    def gamma(z: int) -> np.ndarray:
        # codes beyond the image are unreachable; map them to the first element
        return image[z] if z < len(image) else image[0]

    Z, tau = [], []
    for i in range(n):
        for w in range(size):
            Z.append((i << layout.m_branch) | w)
            tau.append(int(a.nodes[w, i]))
    query = QueryDef(m, m_prime, layout.m_value, Z, tau, beta)

    start = n - 1 if n else 1
    amps = np.sqrt(a.weights)
    u0 = PreparedColumn(0, {layout.index(start, w): amps[w] for w in range(size)})
    unitaries = [u0]
    for k in range(1, n):
        fwd, inv = _shuffle(layout, n - k + 1)
        unitaries.append(BasisPermutation(func=fwd, inverse=inv))
    if n:
        unitaries.append(Composite(()))

    def out(ell: int):
        _, w, zs = layout.split(ell)
        if w >= size:
            return 0.0 if zero is None else zero
        vals = np.array([gamma(z) for z in zs]).reshape(n, -1) if n else np.zeros((0, keys.shape[1]))
        return a.out_map(w, vals)

    alg = QAlg(query, tuple(unitaries), 0, out)
    object.__setattr__(alg, "layout", layout)
    return alg


compile = compile_restricted  # noqa: A001 - public name used throughout


def compiled_fidelity(a: RestrictedRandAlg, theta: FiniteMap, f: TabFn,
                      alg: QAlg | None = None) -> float:
    """Total variation between the compiled and the classical distribution."""
    alg = alg or compile_restricted(a, theta)
    return dist.total_variation(run_exact(alg, f), output_distribution(a, theta.apply(f)))


def d1_gap(a: RestrictedRandAlg, theta: FiniteMap, solution, F_test, norm=None,
           alg: QAlg | None = None) -> tuple[float, float]:
    """Both sides of the compiled-error bound on ``F_test``.

    Returns ``(quantum_error(compiled), 4 * e_ran(a on theta o F) +
    max_f ||S(f) - S(theta o f)||)``.
    """
    alg = alg or compile_restricted(a, theta)
    F_test = list(F_test)
    lhs = quantum_error(alg, solution, F_test, norm)
    thetaF = [theta.apply(f) for f in F_test]
    e_ran = ran_error(a, solution, thetaF, norm)
    shift = 0.0
    for f, tf in zip(F_test, thetaF):
        d = np.atleast_1d(np.asarray(solution(f), dtype=float) - np.asarray(solution(tf), dtype=float))
        shift = max(shift, float(norm(d)) if norm else float(f.space.norm(d)))
    return lhs, 4 * e_ran + shift
