"""Vector-valued Monte Carlo in L_p^M.

For 2 <= p < inf the error rate n^(-1/2) does not depend on M. In L_inf^M a
factor (log(M+1))^(1/2) appears. In L_1 the unit-vector instance with M = N
shows no decay at all until n becomes comparable to N.
"""
import math

from vecmean.experiments import SweepConfig, rate_sweep

grid = [2 ** k for k in range(4, 11)]
for M in (4, 256):
    r = rate_sweep(SweepConfig(algorithm="mc", N=2 ** 12, M=M, p=2, n_grid=grid,
                               trials=100, n_functions=1, seed=0))
    print(f"L_2^{M:<5d} slope {r.slope:.3f}   error at n={grid[-1]}: {r.error[-1]:.4f}")

n = 64
for M in (4, 64, 1024):
    r = rate_sweep(SweepConfig(algorithm="mc", N=1024, M=M, p="inf", n_grid=[n],
                               trials=200, n_functions=1, seed=1))
    c = r.error[0] * math.sqrt(n) / math.sqrt(math.log2(M + 1))
    print(f"L_inf^{M:<5d} error {r.error[0]:.3f}   error / (n^-1/2 sqrt(log(M+1))) = {c:.2f}")

N = 1024
r = rate_sweep(SweepConfig(algorithm="mc", family="unitvec", N=N, M=N, p=1,
                           n_grid=[16, 64, 256], trials=100, n_functions=1, seed=2))
for n, e in zip(r.n, r.error):
    print(f"L_1 unit vectors n={n:4d}: error {e:.3f}, expected 2(1-1/N)^n = {2 * (1 - 1 / N) ** n:.3f}")
