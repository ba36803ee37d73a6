"""Sectional curvature from force and stress terms, checked against a Riemann-tensor oracle."""
import numpy as np

from halflie.curvature import ChartMetricField, CovectorPair, oracle_for_pair, sectional_curvature, sectional_numerator
from halflie.groups import SO3
from halflie.riemannian import ChartAtlas, Metric

cases = [
    ("hyperbolic half-plane", ChartMetricField.hyperbolic(),
     CovectorPair(np.array([0.3, 1.2]), np.array([1.0, 0.0]), np.array([0.0, 1.0]))),
    ("SO(3) bi-invariant", ChartMetricField.from_group(Metric(SO3), ChartAtlas(SO3), "so3"),
     CovectorPair(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))),
]
rng = np.random.Generator(np.random.Philox(key=7))
field = ChartMetricField.random_trig(3, rng)
x = rng.uniform(-1, 1, 3)
cases.append(("random trig metric", field, CovectorPair(x, rng.normal(size=3), rng.normal(size=3))))

for name, F, pair in cases:
    num, ora = sectional_numerator(F, pair), oracle_for_pair(F, pair)
    print(f"{name:22s} K = {sectional_curvature(F, pair):+.6f}   "
          f"formula {num:+.8f}  oracle {ora:+.8f}")
