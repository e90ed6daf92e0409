"""Brute-force references for the two alternating steps and the joint problem.

Run: python demos/04_oracles.py
"""

import numpy as np

from irs_rsbf import instances, oracle, rsbf

rng = np.random.default_rng(5)
H, bank, cfg = instances.random_instance(rng, M=2, N=4, K=2, D=2)
w = instances.cn(rng, 2)
w /= np.linalg.norm(w)

step = rsbf.update_q_colluding(w, bank, H, cfg, rng)
q_grid, v_grid = oracle.grid_search_q(w, H, bank.samples, bank.weights, 16)
slack = oracle.quantization_slack(q_grid, w, H, bank.samples, bank.weights, 16)
print(f"q-step: relaxation bound {step.sdp_bound:.5f}, recovered {step.ratio:.5f}, "
      f"16-level grid {v_grid:.5f} (slack {slack:.5f})")

q = step.vector
w_step = rsbf.update_w_colluding(q, bank, H, cfg)
_, v_rand = oracle.random_search_w(q, H, bank.samples, bank.weights, cfg, 10**5, rng)
print(f"w-step: closed form {w_step.ratio:.6f}, best of 1e5 random beamformers {v_rand:.6f}")

H, bank, cfg = instances.random_instance(rng, M=2, N=2, K=1, D=2)
sol = rsbf.alternate(H, bank, cfg, rng)
final = bank.with_weights(sol.weights)
_, _, v = oracle.joint_brute_force(H, final.samples, final.weights, cfg, 64, 10**4, rng)
print(f"joint: alternating solver {sol.objective:.5f} bit/s/Hz, brute force {v:.5f} bit/s/Hz")
