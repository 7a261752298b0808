"""Finite output distributions: grouping, total variation, error quantiles."""
from __future__ import annotations

import numpy as np

GROUP_TOL = 1e-12


def _key(value) -> tuple:
    return tuple(np.atleast_1d(np.asarray(value, dtype=float)).ravel().tolist())


def group(values, probs, tol: float = GROUP_TOL) -> list[tuple[object, float]]:
    """Merge outcomes whose values agree within ``tol`` per coordinate.

    Returns ``[(value, probability), ...]`` ordered by value.
    """
    exact: dict[tuple, list] = {}
    for v, pr in zip(values, probs):
        k = _key(v)
        pr = np.array(pr, dtype=float)
        if k in exact:
            exact[k][1] = exact[k][1] + pr
        else:
            exact[k] = [v, pr]
    reps: list[list] = []  # [key array, value, prob]
    for k in sorted(exact):
        v, pr = exact[k]
        ka = np.array(k)
        for r in reps:
            if r[0].shape == ka.shape and np.max(np.abs(r[0] - ka)) <= tol:
                r[2] += pr
                break
        else:
            reps.append([ka, v, pr])
    return [(r[1], float(r[2]) if r[2].ndim == 0 else r[2]) for r in reps]


def total_variation(d1, d2, tol: float = GROUP_TOL) -> float:
    values = [v for v, _ in d1] + [v for v, _ in d2]
    probs = [np.array([p, 0.0]) for _, p in d1] + [np.array([0.0, p]) for _, p in d2]
    merged = group(values, probs, tol)
    return 0.5 * float(sum(abs(pq[0] - pq[1]) for _, pq in merged))


def error_quantile(dist, exact, norm, level: float = 0.75) -> float:
    """Smallest error ``e`` with ``P(||exact - output|| <= e) >= level``."""
    errs = np.array([float(norm(np.asarray(exact, dtype=float) - np.asarray(v, dtype=float)))
                     for v, _ in dist])
    probs = np.array([p for _, p in dist])
    order = np.argsort(errs, kind="stable")
    cum = np.cumsum(probs[order])
    pos = int(np.searchsorted(cum, level - 1e-12))
    pos = min(pos, len(order) - 1)
    return float(errs[order][pos])


def expected_error(dist, exact, norm) -> float:
    return float(sum(p * norm(np.asarray(exact, dtype=float) - np.asarray(v, dtype=float))
                     for v, p in dist))
