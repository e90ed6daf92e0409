"""The interior-point SDP solver on a small complex problem, cross-checked by ADMM.

Run: python demos/03_sdp_solver.py
"""

import numpy as np

from irs_rsbf import instances, oracle, sdp

rng = np.random.default_rng(0)
problem = instances.random_sdp(rng, n=4, m=5)
ipm = sdp.solve(problem)
ref = oracle.admm_solve(problem)
print(f"status {ipm.status} after {ipm.iterations} iterations")
print(f"residuals: primal {ipm.primal_residual:.1e}, dual {ipm.dual_residual:.1e}, gap {ipm.duality_gap:.1e}")
print(f"objective: interior point {ipm.objective_value:.10f}, ADMM {ref.objective_value:.10f} "
      f"({ref.iterations} iterations)")

# a max-cut style relaxation: diagonal fixed to one, optimum is rank one when the data is
a = instances.cn(rng, 4)
A = np.outer(a, a.conj())
n = len(a)
diag = [sdp.Constraint(np.diag(np.eye(n)[i]), 1.0) for i in range(n)]
sol = sdp.solve(sdp.SdpProblem(A, sense="maximize", equalities=diag))
print(f"\nrank-one data: optimum {sol.objective_value:.6f} vs (sum |a_n|)^2 = {np.abs(a).sum() ** 2:.6f}, "
      f"rank one: {sol.is_rank_one()}")
