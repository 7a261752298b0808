"""Scalar means: classical Monte Carlo against amplitude estimation.

Monte Carlo error falls like n^(-1/2) in the number of function values;
amplitude estimation inside the query model falls like n^(-1) in the number
of queries. Both sweeps below are exact or seeded, so reruns print the same.
"""
import numpy as np

from vecmean.experiments import SweepConfig, rate_sweep

# Monte Carlo on random sign vectors, N = 2^13 points
mc = rate_sweep(SweepConfig(algorithm="mc", N=2 ** 13, M=1, p="inf",
                            n_grid=[2 ** k for k in range(4, 13)], trials=200, seed=0))
print("Monte Carlo      n   mean error")
for n, e in zip(mc.n, mc.error):
    print(f"           {n:8d}   {e:.4f}")
print(f"fitted slope {mc.slope:.3f}\n")

# quantum counting on random Boolean inputs; the grid lists phase qubits t
ae = rate_sweep(SweepConfig(algorithm="ae", N=16, M=1, n_grid=[3, 4, 5, 6, 7],
                            n_functions=8, seed=0))
print("amplitude est.   n   75% error")
for n, e in zip(ae.n, ae.error):
    print(f"           {n:8d}   {e:.4f}")
print(f"fitted slope {ae.slope:.3f}")

# invert the fitted lines log2(e) = slope * log2(n) + intercept
target = 0.01
need = {name: 2 ** ((np.log2(target) - r.intercept) / r.slope) for name, r in (("MC", mc), ("AE", ae))}
print(f"\nqueries for error {target}: MC ~{need['MC']:.0f}, AE ~{need['AE']:.0f}")
