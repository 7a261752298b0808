"""Turning a classical randomized algorithm into a quantum one.

Monte Carlo with n nodes on N points is written out as a finite algorithm
with N^n equally likely branches, its inputs are rounded by a (1/k)-net, and
the compiler produces a quantum algorithm that uses exactly n queries. The
exact output distributions of the two then coincide.
"""
import numpy as np

from vecmean import dist
from vecmean.qcompile import compile_restricted, make_theta_net
from vecmean.qsim import final_state, run_exact
from vecmean.randomized import mc_mean, output_distribution
from vecmean.spaces import INF, LpSpec, TabFn

N, n = 4, 2
space = LpSpec(INF, 1)
theta = make_theta_net(space, k=4)
classical = mc_mean(N, n, mode="explicit")
quantum = compile_restricted(classical, theta)

lay = quantum.layout
print(f"|Omega| = {classical.size}, net image size {len(theta.image)}")
print(f"registers: counter {lay.m_count}, branch {lay.m_branch}, {n} value slots of "
      f"{lay.m_value} qubits, m = {quantum.m}")

f = TabFn.scalar(np.random.default_rng(1).uniform(-1, 1, N))
state, queries = final_state(quantum, f, return_queries=True)
print(f"queries used: {queries}, nonzero amplitudes: {state.idx.size}")

q = run_exact(quantum, f)
c = output_distribution(classical, theta.apply(f))
print(f"total variation between the two distributions: {dist.total_variation(q, c):.2e}")
for v, p in q:
    print(f"  output {float(np.ravel(v)[0]):+.3f}  probability {p:.4f}")
