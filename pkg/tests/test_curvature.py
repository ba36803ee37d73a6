import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halflie.curvature import (ChartMetricField, CovectorPair, force, numerator_terms,
                               oracle_for_pair, riemann_fd_oracle, sectional_curvature,
                               sectional_numerator, stress, write_table)
from halflie.errors import DegeneratePlane, DomainBoundary
from halflie.groups import SO3
from halflie.riemannian import ChartAtlas, Metric

HYP = ChartMetricField.hyperbolic()
seeds = st.integers(0, 2**32 - 1)


def gen(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def test_force_and_stress_examples():
    pair = CovectorPair(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert np.allclose(force(HYP, pair), [0, 1], atol=1e-9)
    assert np.allclose(stress(HYP, pair), [0, 2], atol=1e-9)
    flat = ChartMetricField.flat(3)
    p = CovectorPair(np.zeros(3), np.ones(3), np.arange(3.0))
    assert np.allclose(force(flat, p), 0) and np.allclose(stress(flat, p), 0)


def test_hyperbolic_numerator_terms():
    pair = CovectorPair(np.array([0.0, 1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    terms = numerator_terms(HYP, pair)
    want = {"R11": 1.0, "R12": 2.0, "R2": -1.0, "R3": -3.0}
    for k, v in want.items():
        assert terms[k] == pytest.approx(v, abs=1e-5)
    assert sectional_numerator(HYP, pair) == pytest.approx(-1.0, abs=1e-4)
    assert oracle_for_pair(HYP, pair) == pytest.approx(-1.0, abs=1e-4)


def test_flat_vanishes():
    flat = ChartMetricField.flat(3)
    pair = CovectorPair(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert sectional_numerator(flat, pair) == 0.0
    assert riemann_fd_oracle(flat, np.zeros(3), [1, 0, 0], [0, 1, 0]) == 0.0


def test_so3_bi_invariant_quarter():
    field = ChartMetricField.from_group(Metric(SO3), ChartAtlas(SO3))
    pair = CovectorPair(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert sectional_numerator(field, pair) == pytest.approx(0.25, abs=1e-3)
    assert sectional_curvature(field, pair) == pytest.approx(0.25, abs=1e-3)
    assert oracle_for_pair(field, pair) == pytest.approx(0.25, abs=1e-3)


@given(seed=seeds)
def test_hyperbolic_constant_curvature(seed):
    rng = gen(seed)
    x = np.array([rng.uniform(-2, 2), rng.uniform(0.5, 2)])
    a, b = rng.normal(size=2), rng.normal(size=2)
    if abs(a[0] * b[1] - a[1] * b[0]) < 0.1:
        return
    assert sectional_curvature(HYP, CovectorPair(x, a, b)) == pytest.approx(-1.0, abs=1e-3)


@given(seed=seeds)
def test_formula_matches_oracle_on_trig_metrics(seed):
    rng = gen(seed)
    n = int(rng.choice([2, 3]))
    field = ChartMetricField.random_trig(n, rng)
    pair = CovectorPair(rng.uniform(-1, 1, n), rng.normal(size=n), rng.normal(size=n))
    val = sectional_numerator(field, pair)
    assert abs(val - oracle_for_pair(field, pair)) <= 1e-3 * (1 + abs(val))


def test_formula_matches_oracle_six_dimensional(rng):
    field = ChartMetricField.random_trig(6, rng, amplitude=0.1)
    pair = CovectorPair(rng.uniform(-1, 1, 6), rng.normal(size=6), rng.normal(size=6))
    val = sectional_numerator(field, pair)
    assert abs(val - oracle_for_pair(field, pair)) <= 1e-3 * (1 + abs(val))


def test_rigid_body_chart_metric_agrees():
    field = ChartMetricField.from_group(Metric(SO3, [1.0, 2.0, 3.0]), ChartAtlas(SO3))
    pair = CovectorPair(np.array([0.2, -0.1, 0.3]), np.array([1.0, 0.5, 0]), np.array([0, 1.0, -1.0]))
    val = sectional_numerator(field, pair)
    assert abs(val - oracle_for_pair(field, pair)) <= 1e-3 * (1 + abs(val))


@settings(max_examples=15)
@given(seed=seeds)
def test_invariances(seed):
    # stencil directions follow the plane, so raw invariance only holds to O(h^2);
    # tolerances are relative to max(1, |K|) since K may be near zero
    rng = gen(seed)
    field = ChartMetricField.random_trig(3, rng)
    x, a, b = rng.uniform(-1, 1, 3), rng.normal(size=3), rng.normal(size=3)
    pair = CovectorPair(x, a, b)
    k = sectional_curvature(field, pair, richardson=True)
    assert numerator_terms(field, pair)["R3"] <= 0
    scaled = sectional_curvature(field, CovectorPair(x, 2 * a, b), richardson=True)
    assert scaled == pytest.approx(k, rel=1e-6, abs=1e-6)
    M = np.array([[1.0, 0.3], [-0.2, 1.1]])
    a2, b2 = M[0, 0] * a + M[0, 1] * b, M[1, 0] * a + M[1, 1] * b
    mixed = sectional_curvature(field, CovectorPair(x, a2, b2), richardson=True)
    assert mixed == pytest.approx(k, rel=1e-6, abs=1e-6)
    assert riemann_fd_oracle(field, x, a, b) == pytest.approx(riemann_fd_oracle(field, x, b, a), rel=1e-5, abs=1e-6)


def test_linearity(rng):
    field = ChartMetricField.random_trig(3, rng)
    x, a, a2, b = rng.uniform(-1, 1, 3), rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
    assert np.allclose(force(field, CovectorPair(x, 2 * a, b)), 2 * force(field, CovectorPair(x, a, b)))
    lhs = stress(field, CovectorPair(x, a + a2, b))
    rhs = stress(field, CovectorPair(x, a, b)) + stress(field, CovectorPair(x, a2, b))
    assert np.allclose(lhs, rhs, atol=1e-7)


def test_h_halving_reduces_discrepancy(rng):
    field = ChartMetricField.random_trig(3, rng)
    pair = CovectorPair(rng.uniform(-1, 1, 3), rng.normal(size=3), rng.normal(size=3))
    disc = [abs(sectional_numerator(field, pair, h) - oracle_for_pair(field, pair, h)) for h in (4e-2, 2e-2)]
    assert disc[0] >= 2 * disc[1]


def test_failure_modes():
    with pytest.raises(DegeneratePlane):
        sectional_curvature(HYP, CovectorPair(np.array([0.0, 1.0]), np.array([1.0, 2.0]), np.array([2.0, 4.0])))
    with pytest.raises(DomainBoundary):
        sectional_numerator(HYP, CovectorPair(np.array([0.0, 1e-3]), np.array([1.0, 0]), np.array([0, 1.0])))
    with pytest.raises(ValueError):
        CovectorPair(np.zeros(2), np.array([np.nan, 0]), np.ones(2))


def test_table_format(tmp_path):
    p = tmp_path / "t.csv"
    write_table(p, [{"model": "m", "point": "0;1", "plane": "e1,e2", "numerator_formula": -1.0,
                     "numerator_oracle": -1.0000007, "sectional": -1.0}])
    head, row = p.read_text().splitlines()
    assert head == "model,point,plane,numerator_formula,numerator_oracle,sectional,discrepancy"
    assert float(row.split(",")[-1]) == pytest.approx(7e-7, rel=1e-6)
