"""Reduction maps, hard instances and reference convergence rates.

Everything here is a pure function of its arguments. Logarithms are base 2.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, DomainError
from .spaces import INF, LpSpec, TabFn, many_sums_T

BALL_TOL = 1e-12
WALSH_DENSE_MAX_K = 10


# -- scalar discretization ------------------------------------------------

def gamma_undiscretize(y, m_star: int):
    """``gamma(y) = 2^(1-m*) y - 1``."""
    y = np.asarray(y)
    return np.ldexp(y.astype(float), 1 - m_star) - 1.0


def beta_discretize(z, m_star: int):
    """Clamp ``z`` to [-1, 1] and encode it with ``m*`` bits.

    ``floor(2^(m*-1) (z + 1))`` for ``-1 <= z < 1``, ``0`` below and
    ``2^m* - 1`` at or above 1. Rounding in ``z + 1`` is corrected so that
    ``gamma(beta(z)) <= z <= gamma(beta(z)) + 2^(1-m*)`` holds in floating
    point as well.
    """
    if m_star < 1:
        raise DomainError("m* must be a positive integer")
    z = np.asarray(z, dtype=float)
    top = (1 << m_star) - 1
    y = np.floor(np.ldexp(z + 1.0, m_star - 1))
    y = np.clip(np.where(z < -1, 0, np.where(z >= 1, top, y)), 0, top).astype(np.int64)
    inside = (z >= -1) & (z < 1)
    step = math.ldexp(1.0, 1 - m_star)
    g = gamma_undiscretize(y, m_star)
    y = np.where(inside & (g > z) & (y > 0), y - 1, y)
    g = gamma_undiscretize(y, m_star)
    y = np.where(inside & (g + step < z) & (y < top), y + 1, y)
    return y if y.ndim else int(y)


# -- lifts of the many sums problem -----------------------------------------

def _check_ball(f: TabFn, what: str) -> None:
    if f.sup_norm() > 1 + BALL_TOL:
        raise DomainError(f"{what} is not in the unit ball of L_inf^N(X)")


def lift_Va_Gamma(a: TabFn, f: TabFn, m_star: int) -> tuple[TabFn, TabFn]:
    """``(V^a f, Gamma f)`` with ``(V^a f)(j) = f(j) a(j)`` and
    ``(Gamma f)(j) = gamma(beta(f(j))) a(j)``."""
    if a.N != f.N:
        raise DimensionMismatchError(f"a has N={a.N} but f has N={f.N}")
    _check_ball(a, "a")
    _check_ball(f, "f")
    fv = f.scalar_values
    g = gamma_undiscretize(beta_discretize(fv, m_star), m_star)
    return (TabFn(fv[:, None] * a.values, a.space),
            TabFn(g[:, None] * a.values, a.space))


# -- tiling and embeddings --------------------------------------------------

def tile(a: TabFn, N: int) -> tuple[TabFn, Callable[[TabFn], TabFn]]:
    """Extend ``a`` from ``N1`` to ``N`` points by periodic repetition.

    With ``N = k N1 + l``: ``a~(i) = a(i mod N1)`` for ``i < k N1`` and 0
    after; the returned lift sends scalar ``f`` on ``N1`` points to
    ``i -> f(i mod N1)``. Then ``T_N^{a~}(lift f) = (k N1 / N) T_N1^a f``.
    """
    N1 = a.N
    if N1 > N:
        raise DomainError(f"cannot tile {N1} points into {N}")
    k = N // N1
    i = np.arange(N)
    vals = np.where((i < k * N1)[:, None], a.values[i % N1], 0.0)
    a_t = TabFn(vals, a.space)

    def lift(f: TabFn) -> TabFn:
        if f.N != N1:
            raise DimensionMismatchError(f"lift expects N={N1}, got {f.N}")
        return TabFn(f.values[i % N1], f.space)

    return a_t, lift


def tile_factor(N1: int, N: int) -> float:
    return (N // N1) * N1 / N


def _jp_exponent(p: float) -> float:
    return 0.0 if p == INF else 1.0 / p


def embed_J(g: np.ndarray, M: int, p: float) -> np.ndarray:
    """``(M/M1)^(1/p) g`` padded with zeros to length ``M``."""
    g = np.asarray(g, dtype=float)
    M1 = g.shape[-1]
    if M1 > M:
        raise DomainError(f"cannot embed dimension {M1} into {M}")
    out = np.zeros(g.shape[:-1] + (M,))
    out[..., :M1] = (M / M1) ** _jp_exponent(p) * g
    return out


def project_P(h: np.ndarray, M1: int, p: float) -> np.ndarray:
    """``(M1/M)^(1/p)`` times the first ``M1`` coordinates."""
    h = np.asarray(h, dtype=float)
    M = h.shape[-1]
    if M1 > M:
        raise DomainError(f"cannot project dimension {M} onto {M1}")
    return (M1 / M) ** _jp_exponent(p) * h[..., :M1]


def embed_JP(g, M: int, p: float | None = None):
    """Return ``(J g, P)``: the isometric embedding of ``g`` into ``L_p^M``
    and the contractive left inverse ``P: L_p^M -> L_p^M1``.

    ``g`` may be a :class:`~vecmean.spaces.VecX` (``p`` taken from it) or an
    array with explicit ``p``.
    """
    if hasattr(g, "space"):
        p = g.space.p if p is None else p
        g = g.coords
    if p is None:
        raise DomainError("p is required for a raw array")
    g = np.asarray(g, dtype=float)
    M1 = g.shape[-1]
    Jg = embed_J(g, M, p)
    return Jg, (lambda h: project_P(h, M1, p))


# -- hard instances ---------------------------------------------------------

def instance_unit_vectors(p: float, N1: int) -> TabFn:
    """``a(j) = N1^(1/p) e_j`` in ``L_p^N1``, for all ``N1`` columns."""
    scale = N1 ** _jp_exponent(p)
    return TabFn(scale * np.eye(N1), LpSpec(p, N1))


def walsh_matrix(k: int) -> np.ndarray:
    """``((-1)^(i.j))`` of order ``2^k``, ``i.j`` the bitwise inner product."""
    if k < 0:
        raise DomainError("k must be nonnegative")
    if k > WALSH_DENSE_MAX_K:
        raise DomainError(f"dense Walsh matrices are limited to k <= {WALSH_DENSE_MAX_K}; use fwht")
    i = np.arange(1 << k)
    bits = np.bitwise_and.outer(i, i)
    parity = np.zeros_like(bits)
    for _ in range(k):
        parity ^= bits & 1
        bits >>= 1
    return (1 - 2 * parity).astype(np.int64)


def fwht(x) -> np.ndarray:
    """Fast Walsh-Hadamard transform along the last axis (unnormalized)."""
    a = np.array(x, dtype=float)
    n = a.shape[-1]
    if n & (n - 1):
        raise DomainError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(a.shape[:-1] + (n // (2 * h), 2, h))
        u, v = a[..., 0, :].copy(), a[..., 1, :].copy()
        a[..., 0, :], a[..., 1, :] = u + v, u - v
        a = a.reshape(a.shape[:-3] + (n,))
        h *= 2
    return a


def walsh_apply(f, k: int | None = None) -> np.ndarray:
    """``W f = sum_j f(j) w(j)``; dense for small orders, matrix-free beyond."""
    f = np.asarray(f, dtype=float)
    if k is None:
        k = int(round(math.log2(f.shape[-1])))
    if k <= WALSH_DENSE_MAX_K:
        return f @ walsh_matrix(k).T
    return fwht(f)


def instance_walsh(k: int, p: float = 2.0) -> TabFn:
    """``a(j) = w(j)``, the ``j``-th Walsh column, as an element of ``L_p^(2^k)``."""
    W = walsh_matrix(k)
    return TabFn(W.T.astype(float), LpSpec(p, 1 << k))


def walsh_square_deviation(W) -> int:
    """``max |W^2 - N1 I|`` in integer arithmetic (0 for a valid Walsh matrix)."""
    W = np.asarray(W, dtype=np.int64)
    return int(np.abs(W @ W - W.shape[0] * np.eye(W.shape[0], dtype=np.int64)).max())


def T_unitvec_identity_gap(p: float, f: TabFn) -> float:
    """``max |T^a f - N1^(1/p-1) f|`` for the unit-vector instance."""
    a = instance_unit_vectors(p, f.N)
    lhs = many_sums_T(a, f).coords
    return float(np.abs(lhs - f.N ** (_jp_exponent(p) - 1) * f.scalar_values).max())


def WT_walsh_identity_gap(k: int, f: TabFn) -> float:
    """``max |W T^a f - f|`` for the Walsh instance."""
    a = instance_walsh(k)
    return float(np.abs(walsh_apply(many_sums_T(a, f).coords, k) - f.scalar_values).max())


# -- reference rates --------------------------------------------------------

def lam(N: float) -> float:
    """``(log log N)^(-3/2) (log log log N)^(-1)`` for ``N > 4``."""
    if N <= 4:
        raise DomainError("lambda(N) needs N > 4")
    ll = math.log2(math.log2(N))
    return ll ** -1.5 / math.log2(ll)


def rate_exponent(setting: str, kind: str, p: float = INF) -> float:
    """Exponent ``s`` of the leading power ``n^s`` (log factors dropped)."""
    if kind == "scalar":
        return {"ran": -0.5, "q": -1.0}[setting]
    if setting not in ("ran", "q"):
        raise DomainError(f"unknown setting {setting!r}")
    return -0.5 if p >= 2 else -1.0 + 1.0 / p


def theoretical_rate(setting: str, kind: str, p: float = INF, M: int = 1, n: int = 1,
                     bound: str = "rate") -> float:
    """Reference rate with every unknown constant set to 1.

    ``bound="rate"`` gives the two-sided rate with log factors suppressed,
    ``"upper"`` the upper bound including the ``(log(M+1))^(1/2)`` factor for
    p = inf, and ``"lower"`` the lower-bound form involving ``lambda(n)`` and
    ``(log n)^(1 - 2/p)``. Values are correct only up to constants.
    """
    if n < 1:
        raise DomainError("n must be positive")
    if setting not in ("ran", "q"):
        raise DomainError(f"unknown setting {setting!r}")
    s = rate_exponent(setting, kind, p)
    base = float(n) ** s
    if kind == "scalar" or bound == "rate":
        return base
    if bound == "upper":
        return base * math.sqrt(math.log2(M + 1)) if p == INF else base
    if bound == "lower":
        if p >= 2:
            return base * lam(n)
        if n <= 1:
            raise DomainError("log n must be positive")
        return base * math.log2(n) ** (1.0 - 2.0 / p)
    raise DomainError(f"unknown bound {bound!r}")
