"""Geodesic distance on SO(3) from the control-energy boundary-value solver.

For the bi-invariant metric the distance between x0 and exp(theta * a) x0 is
theta, which gives an exact check on the optimizer.
"""
import numpy as np

from halflie.bvp import BVPOptions, BVPProblem, minimality_check, solve_bvp
from halflie.groups import SO3
from halflie.riemannian import Metric

metric = Metric(SO3)
rng = np.random.Generator(np.random.Philox(key=2026))
for theta in (0.5, 1.0, 2.0):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    x0 = SO3.random_point(rng, 0.5)
    x1 = SO3.point(SO3.exp(SO3.vector(theta * axis)).data @ x0.data)
    sol = solve_bvp(BVPProblem(metric, x0, x1, 16), BVPOptions(restarts=4, seed=1))
    rep = minimality_check(sol, metric)
    print(f"theta {theta:.1f}: distance {np.sqrt(sol.energy):.10f}, "
          f"endpoint error {sol.endpoint_error:.1e}, minimal {rep.passed}")
