"""Acceptance suite: one test per criterion, each with its runtime budget."""
import time
from pathlib import Path

import numpy as np
import pytest

from halflie import harness
from halflie.bvp import BVPOptions, BVPProblem, completeness_probe, minimality_check, nondegeneracy_probe, solve_bvp
from halflie.groups import (SO3, FourierDiffeo, SemidirectProduct, VectorGroup, bracket, bracket_via_flows,
                            heisenberg_datum, validate_extension_datum)
from halflie.riemannian import ChartAtlas, Metric, ad_transpose, lagrangian_step, no_loss_no_gain_check, shoot

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
RIGID = Metric(SO3, [1.0, 2.0, 3.0])
BI = Metric(SO3)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_01_jet_functoriality(criterion):
    with Clock() as c:
        worst, exact_ok = harness.jets_functoriality(seed=1, n_pairs=200)
    ok = worst <= 1e-10 and exact_ok and c.elapsed < 10
    criterion(1, ok, f"max err {worst:.2e}, exact mode {exact_ok}, {c.elapsed:.1f}s")
    assert ok


def test_02_jet_inversion_and_bounds(criterion):
    with Clock() as c:
        r = harness.jets_bounds(seed=1, n_bounds=1000)
    violations = (r["composition_bound_violations"] + r["composition_lipschitz_violations"]
                  + r["evaluation_bound_violations"])
    ok = r["inversion_max_err"] <= 1e-9 and violations == 0 and c.elapsed < 10
    criterion(2, ok, f"inversion {r['inversion_max_err']:.2e}, {violations} violations, {c.elapsed:.1f}s")
    assert ok


def test_03_bracket_consistency(criterion):
    rng = np.random.Generator(np.random.Philox(key=3))
    ts = (4e-2, 2e-2, 1e-2)
    orders, finals = [], []
    with Clock() as c:
        for model in (SO3, SemidirectProduct.rotation(3), FourierDiffeo(16)):
            for _ in range(3):
                X, Y = model.random_vector(rng), model.random_vector(rng)
                exact = bracket(X, Y).coords
                err = [np.max(np.abs(bracket_via_flows(X, Y, t).coords - exact)) for t in ts]
                orders.append(min(np.log2(err[i] / err[i + 1]) for i in range(len(ts) - 1)))
                finals.append(err[-1])
    ok = min(orders) >= 2 and max(finals) <= 1e-3 and c.elapsed < 30
    criterion(3, ok, f"min order {min(orders):.2f}, max discrepancy {max(finals):.1e} at t=1e-2, {c.elapsed:.1f}s")
    assert ok


def test_04_euler_arnold_conservation(criterion):
    rng = np.random.Generator(np.random.Philox(key=4))
    with Clock() as c:
        tr = shoot(RIGID, np.array([1.0, 1.0, 0.0]), T=10.0, h=1e-3)
        cas = np.array([np.linalg.norm(RIGID.gram @ s.u.coords) for s in tr.states])
        cas_drift = float((cas.max() - cas.min()) / cas[0])
        resid = 0.0
        for metric in (RIGID, BI):
            for _ in range(100):
                u, w, v = (SO3.random_vector(rng) for _ in range(3))
                lhs = metric.inner(ad_transpose(metric, u, w).coords, v.coords)
                rhs = metric.inner(w.coords, bracket(u, v).coords)
                resid = max(resid, abs(lhs - rhs))
    ok = tr.max_drift <= 1e-8 and cas_drift <= 1e-8 and resid <= 1e-10 and c.elapsed < 20
    criterion(4, ok, f"energy drift {tr.max_drift:.1e}, Casimir drift {cas_drift:.1e}, "
                     f"ad^T residual {resid:.1e}, {c.elapsed:.1f}s")
    assert ok


def test_05_eulerian_lagrangian_agreement(criterion):
    atlas = ChartAtlas(SO3)
    u0 = np.array([1.0, 1.0, 0.0])
    devs = {}
    with Clock() as c:
        for name, metric in (("so3", BI), ("rigid-body", RIGID)):
            eul = shoot(metric, u0, 1.0, 1e-3)
            lag = lagrangian_step(metric, atlas, (SO3.identity(), u0), 1.0, 1e-3)
            devs[name] = max(SO3.distance(a.g, b) for a, b in zip(eul.states, lag.points(atlas)))
    ok = max(devs.values()) <= 1e-6 and c.elapsed < 30
    criterion(5, ok, ", ".join(f"{k} {v:.1e}" for k, v in devs.items()) + f", {c.elapsed:.1f}s")
    assert ok


def test_06_minimal_geodesics(criterion):
    rng = np.random.Generator(np.random.Philox(key=6))
    opts = BVPOptions(restarts=8, seed=6)
    errs, minimal = [], []
    with Clock() as c:
        for theta in (0.5, 1.0, 2.0):
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            x0 = SO3.random_point(rng, 0.5)
            x1 = SO3.point(SO3.exp(SO3.vector(theta * axis)).data @ x0.data)
            angle = np.linalg.norm(SO3.chart(x1 * x0.inverse()))
            sol = solve_bvp(BVPProblem(BI, x0, x1, 16), opts)
            errs.append(abs(np.sqrt(sol.energy) - angle))
            minimal.append(sol.converged and minimality_check(sol, BI).passed)
    ok = max(errs) <= 1e-4 and all(minimal) and c.elapsed < 120
    criterion(6, ok, f"max |dist - angle| {max(errs):.1e}, minimality {minimal}, {c.elapsed:.1f}s")
    assert ok


def test_07_completeness(criterion):
    with Clock() as c:
        rep = completeness_probe(Metric(FourierDiffeo(16), s=2), 20, 50.0, seed=6, h=1e-2, drift_tol=1e-6)
    ok = rep.passed and c.elapsed < 300
    detail = ", ".join(f"{k} {v:.1e}" if isinstance(v, float) else f"{k} {v}" for k, v in sorted(rep.values.items()))
    criterion(7, ok, f"{detail}, {c.elapsed:.1f}s")
    assert ok


@pytest.mark.parametrize("name, metric", [("so3", BI), ("rigid-body", RIGID)])
def test_08_nondegeneracy(criterion, name, metric):
    floor = 0.9 * np.sqrt(np.linalg.eigvalsh(metric.gram).min())
    with Clock() as c:
        rep = nondegeneracy_probe(metric, 100, seed=8, opts=BVPOptions(restarts=1, seed=8))
    ratio = rep.values["min_ratio"]
    ok = rep.passed and ratio >= floor and c.elapsed < 300
    criterion(8, ok, f"{name}: min ratio {ratio:.4f} >= {floor:.4f}, {c.elapsed:.1f}s")
    assert ok


def test_09_no_loss_no_gain(criterion):
    model = FourierDiffeo(32)
    u0 = harness.power_law_velocity(model, -4.0, harness.make_rng(7, 6))
    with Clock() as c:
        rep = no_loss_no_gain_check(Metric(model, s=2), u0, T=1.0, h=1e-3)
    exps = rep.curve_exponents
    ok = len(exps) == 5 and bool(np.all(np.abs(exps + 4) <= 0.5)) and c.elapsed < 120
    criterion(9, ok, "exponents " + " ".join(f"{e:.2f}" for e in exps) + f", {c.elapsed:.1f}s")
    assert ok


def test_10_curvature_formula(criterion):
    def discrepancy(rows):
        return np.array([abs(r["numerator_formula"] - r["numerator_oracle"]) for r in rows])

    with Clock() as c:
        rows = harness._curvature_rows(5, 50, 1e-3)
        coarse = discrepancy(harness._curvature_rows(5, 50, 2e-3))
    fine = discrepancy(rows)
    scale = np.array([1 + abs(r["numerator_oracle"]) for r in rows])
    expected_ok = all(abs(r["sectional"] - r["expected"]) <= 1e-3 for r in rows if r["expected"] is not None)
    halving = bool(np.all(coarse >= 2 * fine))
    worst = float(np.max(fine / scale))
    ok = worst <= 1e-3 and expected_ok and halving and len(rows) == 54 and c.elapsed < 120
    criterion(10, ok, f"worst scaled discrepancy {worst:.1e}, expected values {expected_ok}, "
                      f"h-halving {halving} (min factor {np.min(coarse / np.maximum(fine, 1e-300)):.2f}), "
                      f"{c.elapsed:.1f}s")
    assert ok


def test_11_extension_algebra(criterion):
    R1, R2 = VectorGroup(1), VectorGroup(2)
    with Clock() as c:
        heis = validate_extension_datum(heisenberg_datum(), R1, R2, 200, seed=11, dyadic=10)
        pert = validate_extension_datum(heisenberg_datum(True), R1, R2, 200, seed=11, dyadic=10)
        xs = np.array(pert.samples)
        pred = 2 * np.abs(xs[:, 0, 1] * xs[:, 1, 1] * xs[:, 2, 1])
        match = np.array_equal(pert.per_sample["twisted_cocycle"], pred)
        law = harness.semidirect_law_residual(11, 1000)
    heis_res = max(heis.residuals.values())
    ok = (heis.passed and heis_res == 0.0 and not pert.passed and match and law == 0.0
          and c.elapsed < 10)
    criterion(11, ok, f"heisenberg residual {heis_res}, perturbed fails {not pert.passed} "
                      f"and matches 2|x2y2z2| {match}, semidirect law residual {law}, {c.elapsed:.1f}s")
    assert ok


# the three slowest experiments rerun at reduced size; code paths are unchanged
REDUCED = {"bvp-distance": {"thetas": "1.0", "restarts": "2"},
           "completeness": {"samples": "3", "T": "5"},
           "nondegeneracy": {"samples": "10"}}


def test_12_harness_determinism(criterion, tmp_path):
    mismatched, seen = [], set()
    for path in sorted(CONFIGS.glob("*.ini")):
        cfg = harness.load_config(path)
        cfg.options.update(REDUCED.get(cfg.name, {}))
        seen.add(cfg.name)
        outputs = []
        for run in ("a", "b"):
            status, _ = harness.run(cfg, tmp_path / run)
            assert status == 0, f"{path.name} failed"
            produced = sorted((tmp_path / run).glob(Path(cfg.output).stem + ".*"))
            outputs.append([p.read_bytes() for p in produced])
            for p in produced:
                p.unlink()
        if not outputs[0] or outputs[0] != outputs[1]:
            mismatched.append(path.name)
    ok = not mismatched and seen == set(harness.EXPERIMENTS)
    criterion(12, ok, f"{len(seen)} experiments rerun, mismatches {mismatched or 'none'}")
    assert ok
