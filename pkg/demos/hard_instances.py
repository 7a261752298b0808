"""The hard weight instances and the maps that move between problem sizes.

Unit vectors give T^a f = N^(1/p-1) f, Walsh columns give W T^a f = f, tiling
stretches an instance to more points, and J/P move between dimensions
without changing norms.
"""
import numpy as np

from vecmean.reductions import (embed_JP, instance_unit_vectors, instance_walsh, tile,
                                tile_factor, walsh_apply, walsh_matrix)
from vecmean.spaces import TabFn, many_sums_T, norm

rng = np.random.default_rng(0)
k = 4
N1 = 2 ** k
f = TabFn.scalar(rng.uniform(-1, 1, N1))

print(walsh_matrix(2))
W = walsh_matrix(k)
print("W^2 == N1 I:", np.array_equal(W @ W, N1 * np.eye(N1, dtype=int)))

a = instance_walsh(k)
print("max |W T^a f - f| =", np.abs(walsh_apply(many_sums_T(a, f).coords) - f.scalar_values).max())

u = instance_unit_vectors(1.5, N1)
gap = many_sums_T(u, f).coords - N1 ** (1 / 1.5 - 1) * f.scalar_values
print("unit vectors, p=1.5: max gap", np.abs(gap).max())

# stretch to 37 points: 2 full copies, 5 zero rows
at, lift = tile(a, 37)
lhs = many_sums_T(at, lift(f)).coords
print("tiling factor", tile_factor(N1, 37), "gap",
      np.abs(lhs - tile_factor(N1, 37) * many_sums_T(a, f).coords).max())

g = rng.normal(size=3)
Jg, P = embed_JP(g, 12, p=3)
print(f"|g| = {norm(g, 3):.6f}, |Jg| = {norm(Jg, 3):.6f}, P(Jg) == g: {np.allclose(P(Jg), g)}")
