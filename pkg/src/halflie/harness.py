"""Config-driven experiment runner.

Configs are INI files::

    [experiment]
    name = bvp-distance
    seed = 7
    output = bvp.csv          ; relative to --out (default: current directory)

    [model]                   ; matrix | semidirect | fourier | heisenberg
    variant = matrix
    n = 3

    [metric]
    inertia = 1, 2, 3         ; diagonal or full row-major matrix
    ; s = 2                   ; Sobolev order for fourier models

    [options]                 ; experiment-specific numeric options
    thetas = 0.5, 1.0, 2.0

Randomness: one 64-bit seed per experiment feeds ``numpy.random.SeedSequence``
and the counter-based Philox generator; sub-streams come from
``SeedSequence.spawn``.  Exit status: 0 pass, 1 assertion failure,
2 configuration error.  ``HALFLIE_OUT`` overrides the output directory.
"""
from __future__ import annotations

import configparser
import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jets
from .bvp import (BVPOptions, BVPProblem, completeness_probe, minimality_check,
                  nondegeneracy_probe, solve_bvp, write_solutions_csv)
from .curvature import ChartMetricField, CovectorPair, oracle_for_pair, sectional_curvature, sectional_numerator
from .errors import ConfigError
from .groups import (MatrixGroup, SemidirectProduct, VectorGroup, heisenberg_datum, split_datum,
                     validate_extension_datum)
from .groups.records import model_from_record
from .riemannian import ChartAtlas, Metric, no_loss_no_gain_check, shoot

log = logging.getLogger("halflie")

EXPERIMENTS = {
    "jets-selftest": "jet functoriality, inversion round-trip and norm bounds on random jets",
    "group-validate": "extension-datum identities and the semidirect group law",
    "shoot": "Euler-Arnold geodesic shooting with energy and Casimir monitors",
    "bvp-distance": "geodesic distance by the control-energy boundary-value solver",
    "curvature-table": "force/stress sectional curvature against a Riemann-tensor oracle",
    "completeness": "long-horizon shooting of unit-energy geodesics (no blow-up)",
    "noloss": "Fourier decay exponent along a geodesic of circle diffeomorphisms",
    "nondegeneracy": "geodesic distance against chart norm for random points",
}

ANCHORS = {
    "jets-selftest": "jet composition and evaluation bounds",
    "group-validate": "extension data, split extensions",
    "shoot": "geodesic equation, Eulerian form",
    "bvp-distance": "Hopf-Rinow: minimal geodesics",
    "curvature-table": "curvature via locally constant 1-forms",
    "completeness": "Hopf-Rinow: geodesic completeness",
    "noloss": "no-loss-no-gain",
    "nondegeneracy": "non-degenerate geodesic distance",
}


@dataclass
class ExperimentConfig:
    name: str
    seed: int
    output: str
    model: dict = field(default_factory=dict)
    metric: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def opt(self, key, default=None, kind=float):
        if key not in self.options:
            if default is None:
                raise ConfigError(f"option {key!r} is required for {self.name}")
            return default
        raw = self.options[key]
        try:
            if kind is list:
                return [float(v) for v in raw.split(",") if v.strip()]
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"option {key!r}: {exc}") from None


def load_config(path, seed_override=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    ex = cp["experiment"]
    name = ex.get("name")
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    if seed_override is not None:
        seed = seed_override
    else:
        if "seed" not in ex:
            raise ConfigError("missing seed")
        try:
            seed = int(ex["seed"])
        except ValueError:
            raise ConfigError(f"seed must be an integer, got {ex['seed']!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return ExperimentConfig(name=name, seed=seed, output=ex.get("output", f"{name}.csv"),
                            model=dict(cp["model"]) if "model" in cp else {},
                            metric=dict(cp["metric"]) if "metric" in cp else {},
                            options=dict(cp["options"]) if "options" in cp else {})


def make_rng(seed, *path):
    ss = np.random.SeedSequence(seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(ss))


def build_model(section: dict):
    rec = dict(section) or {"variant": "matrix", "n": "3"}
    try:
        return model_from_record(rec)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad model section: {exc}") from None


def build_metric(model, section: dict) -> Metric:
    try:
        if "s" in section:
            return Metric(model, s=float(section["s"]))
        if "inertia" in section:
            vals = np.array([float(v) for v in section["inertia"].split(",")])
            if vals.size == model.dim:
                return Metric(model, np.diag(vals))
            return Metric(model, vals.reshape(model.dim, model.dim))
        return Metric(model)
    except ValueError as exc:
        raise ConfigError(f"bad metric section: {exc}") from None


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10e}"
    return str(v)


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])


# ---------------------------------------------------------------------------
# experiments; each returns a list of (check name, passed)

def truncated_composite_jet(g, f, x, k):
    """k-jet of g o f at x via polynomial substitution truncated at degree k."""
    exact = jets._is_exact(x)
    origin = np.array([jets.Fraction(0)] * f.n_in, dtype=object) if exact else np.zeros(f.n_in)
    F = f.shift(x)
    zero = (0,) * f.n_in
    increment = jets.PolynomialMap(f.n_in, f.n_out, {e: c for e, c in F.terms.items() if e != zero})
    H = g.shift(F.terms.get(zero, np.zeros(f.n_out))).compose(increment, max_degree=k)
    oj = jets.PolynomialMap(f.n_in, g.n_out, H.terms).jet(origin, k)
    return jets.Jet(x, oj.target, oj.blocks)


def well_conditioned(n, rng):
    """Random ``Q diag(s)`` with Q orthogonal and s in [0.5, 2] (condition <= 4)."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q * rng.uniform(0.5, 2.0, n)


def jets_functoriality(seed, n_pairs=200):
    """Max error of compose against truncated substitution, and exact-mode equality."""
    rng = make_rng(seed, 0)
    worst = 0.0
    for _ in range(n_pairs):
        n, m, l = (int(v) for v in rng.integers(1, 4, 3))
        k = int(rng.integers(1, 5))
        df, dg = (int(v) for v in rng.integers(1, 5, 2))
        f = jets.PolynomialMap.random(n, m, df, rng)
        g = jets.PolynomialMap.random(m, l, dg, rng)
        x = rng.uniform(-1, 1, n)
        jf = f.jet(x, k)
        got = jets.compose(g.jet(jf.target, k), jf)
        want = truncated_composite_jet(g, f, x, k)
        worst = max(worst, float(np.max(np.abs(got.flat() - want.flat()))))

    rng = make_rng(seed, 1)
    exact_ok = True
    for _ in range(20):
        n, m, l = (int(v) for v in rng.integers(1, 3, 3))
        k = int(rng.integers(1, 4))
        f = jets.PolynomialMap.random(n, m, 2, rng, exact=True)
        g = jets.PolynomialMap.random(m, l, 2, rng, exact=True)
        x = np.array([jets.Fraction(int(v), 4) for v in rng.integers(-4, 5, n)], dtype=object)
        jf = f.jet(x, k)
        got = jets.compose(g.jet(jf.target, k), jf)
        want = truncated_composite_jet(g, f, x, k)
        exact_ok &= bool(np.all(got.flat() == want.flat()))
    return worst, exact_ok


def jets_bounds(seed, n_bounds=1000):
    """Inversion round-trip error and bound violation counts on random jets."""
    rng = make_rng(seed, 2)
    inv_worst, comp_viol, lip_viol, eval_viol = 0.0, 0, 0, 0
    for _ in range(n_bounds):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, 5))

        def mk(src, tgt):
            return jets.Jet.from_tensors(src, tgt, [rng.normal(size=(n,) + (n,) * j) for j in range(1, k + 1)])

        s = mk(rng.normal(size=n), rng.normal(size=n))
        t = mk(s.target, rng.normal(size=n))
        lhs, rhs = jets.composition_bound(t, s)
        comp_viol += lhs > rhs
        eps = 10 ** rng.uniform(-3, 0)

        def nudge(jet, src):
            return jets.Jet.from_tensors(src, jet.target + eps * rng.normal(size=n),
                                         [b + eps * rng.normal(size=b.shape) for b in jet.tensors()])

        s2 = nudge(s, s.source + eps * rng.normal(size=n))
        t2 = nudge(t, s2.target)
        lhs, rhs = jets.composition_lipschitz_bound(t, s, t2, s2)
        lip_viol += lhs > rhs
        lhs, rhs = jets.evaluation_bound(s, jets.TangentPoint(s.source, 3 * rng.normal(size=n)))
        eval_viol += lhs > rhs
        a = jets.Jet.from_tensors(s.source, s.target,
                                  [well_conditioned(n, rng)]
                                  + [b.to_full() for b in s.blocks[1:]])
        rt = jets.compose(jets.invert(a), a)
        ident = jets.identity_jet(a.source, k)
        inv_worst = max(inv_worst, float(np.max(np.abs(rt.flat() - ident.flat()))))
    return {"inversion_max_err": inv_worst, "composition_bound_violations": comp_viol,
            "composition_lipschitz_violations": lip_viol, "evaluation_bound_violations": eval_viol}


def jets_selftest(seed, n_pairs=200, n_bounds=1000):
    worst, exact_ok = jets_functoriality(seed, n_pairs)
    return {"functoriality_max_err": worst, "exact_mode_equal": exact_ok, **jets_bounds(seed, n_bounds)}


def run_jets(cfg, out):
    r = jets_selftest(cfg.seed, int(cfg.opt("pairs", 200)), int(cfg.opt("bound_samples", 1000)))
    checks = [("functoriality", r["functoriality_max_err"], 1e-10, r["functoriality_max_err"] <= 1e-10),
              ("exact_mode", int(r["exact_mode_equal"]), 1, r["exact_mode_equal"]),
              ("inversion", r["inversion_max_err"], 1e-9, r["inversion_max_err"] <= 1e-9),
              ("composition_bound_violations", r["composition_bound_violations"], 0,
               r["composition_bound_violations"] == 0),
              ("composition_lipschitz_violations", r["composition_lipschitz_violations"], 0,
               r["composition_lipschitz_violations"] == 0),
              ("evaluation_bound_violations", r["evaluation_bound_violations"], 0,
               r["evaluation_bound_violations"] == 0)]
    write_rows(out, ["check", "value", "threshold", "pass"], checks)
    return [(c[0], bool(c[3])) for c in checks]


def semidirect_law_residual(seed, n_pairs=1000):
    """Max deviation of the implemented law from ``(g1 g2, rho(g2)^-1 h1 + h2)``."""
    S = SemidirectProduct.rotation(3)
    rng = make_rng(seed, 3)
    worst = 0.0
    for _ in range(n_pairs):
        a, b = S._random(rng), S._random(rng)
        g, h = S._mul(a, b)
        worst = max(worst, float(np.max(np.abs(g - a[0] @ b[0]))),
                    float(np.max(np.abs(h - (np.ascontiguousarray(b[0].T) @ a[1] + b[1])))))
    return worst


def run_group_validate(cfg, out):
    n = int(cfg.opt("samples", 200))
    R2, R1 = VectorGroup(2), VectorGroup(1)
    # dyadic samples make the polynomial identities exact in floating point
    heis = validate_extension_datum(heisenberg_datum(), R1, R2, n, cfg.seed, dyadic=10)
    pert = validate_extension_datum(heisenberg_datum(True), R1, R2, n, cfg.seed, dyadic=10)
    xs = np.array(pert.samples)
    pred = 2 * np.abs(xs[:, 0, 1] * xs[:, 1, 1] * xs[:, 2, 1])
    match = float(np.max(np.abs(pert.per_sample["twisted_cocycle"] - pred)))
    so3 = MatrixGroup(3)
    split = validate_extension_datum(split_datum(so3, lambda g: g, 3), VectorGroup(3), so3, n, cfg.seed)
    law = semidirect_law_residual(cfg.seed, int(cfg.opt("pairs", 1000)))
    heis_zero = heis.passed and max(heis.residuals.values()) == 0.0
    rows = [("heisenberg", max(heis.residuals.values()), heis_zero, True),
            ("heisenberg_perturbed", pert.residuals["twisted_cocycle"], pert.passed, False),
            ("perturbed_matches_2x2y2z2", match, match <= 1e-9, True),
            ("split_semidirect", max(split.residuals.values()), split.passed, True),
            ("semidirect_law", law, law == 0.0, True)]
    write_rows(out, ["check", "residual", "passed", "expected"], rows)
    return [(r[0], bool(r[2]) == r[3]) for r in rows]


def run_shoot(cfg, out):
    model = build_model(cfg.model)
    metric = build_metric(model, cfg.metric)
    u0 = np.array(cfg.opt("u0", None, list))
    if u0.size != model.dim:
        raise ConfigError(f"u0 needs {model.dim} entries")
    T, h = cfg.opt("T", 10.0), cfg.opt("h", 1e-3)
    tr = shoot(metric, u0, T, h, record_every=int(cfg.opt("record_every", 100)))
    tr.to_csv(out)
    checks = [("energy_drift", tr.max_drift <= cfg.opt("drift_tol", 1e-8))]
    if metric.s is None:
        cas = [np.linalg.norm(metric.gram @ s.u.coords) for s in tr.states]
        checks.append(("casimir_drift", (max(cas) - min(cas)) / cas[0] <= cfg.opt("drift_tol", 1e-8)))
    return checks


def run_bvp(cfg, out):
    model = build_model(cfg.model)
    metric = build_metric(model, cfg.metric)
    if not isinstance(model, MatrixGroup) or model.n != 3:
        raise ConfigError("bvp-distance runs on SO(3)")
    thetas = cfg.opt("thetas", [0.5, 1.0, 2.0], list)
    opts = BVPOptions(restarts=int(cfg.opt("restarts", 8)), seed=cfg.seed)
    rng = make_rng(cfg.seed, 4)
    rows, checks = [], []
    biinv = np.allclose(metric.gram, metric.gram[0, 0] * np.eye(3))
    for th in thetas:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        x0 = model.random_point(rng, 0.5)
        x1 = model.point(model._exp(th * axis) @ x0.data)
        sol = solve_bvp(BVPProblem(metric, x0, x1, int(cfg.opt("M", 16))), opts)
        rows.append((x0, x1, sol))
        checks.append((f"converged_{th}", sol.converged))
        if biinv:
            d = np.sqrt(sol.energy / metric.gram[0, 0])
            checks.append((f"distance_{th}", abs(d - th) <= 1e-4))
            checks.append((f"minimality_{th}", minimality_check(sol, metric).passed))
    write_solutions_csv(out, rows)
    return checks


def _curvature_rows(seed, n_random, h):
    rows = []
    H = ChartMetricField.hyperbolic()
    rng = make_rng(seed, 5)
    for _ in range(3):
        x = np.array([rng.uniform(-1, 1), rng.uniform(0.5, 2)])
        pair = CovectorPair(x, rng.normal(size=2), rng.normal(size=2))
        rows.append(("hyperbolic", x, pair, H, -1.0))
    so3 = ChartMetricField.from_group(Metric(MatrixGroup(3)), ChartAtlas(MatrixGroup(3)), "so3-biinvariant")
    rows.append(("so3-biinvariant", np.zeros(3), CovectorPair(np.zeros(3), [1, 0, 0], [0, 1, 0]), so3, 0.25))
    for i in range(n_random):
        F = ChartMetricField.random_trig(3, rng)
        x = rng.uniform(-1, 1, 3)
        rows.append((f"trig3-{i}", x, CovectorPair(x, rng.normal(size=3), rng.normal(size=3)), F, None))
    out = []
    for name, x, pair, F, expected in rows:
        num = sectional_numerator(F, pair, h)
        ora = oracle_for_pair(F, pair, h)
        out.append({"model": name, "point": ";".join(f"{v:.6f}" for v in x),
                    "plane": ";".join(f"{v:.6f}" for v in np.concatenate([pair.alpha, pair.beta])),
                    "numerator_formula": num, "numerator_oracle": ora,
                    "sectional": sectional_curvature(F, pair, h), "expected": expected})
    return out


def run_curvature(cfg, out):
    from .curvature import write_table
    rows = _curvature_rows(cfg.seed, int(cfg.opt("random_metrics", 50)), cfg.opt("h", 1e-3))
    write_table(out, rows)
    checks = []
    for r in rows:
        ok = abs(r["numerator_formula"] - r["numerator_oracle"]) <= 1e-3 * (1 + abs(r["numerator_oracle"]))
        if r["expected"] is not None:
            ok &= abs(r["sectional"] - r["expected"]) <= 1e-3
        checks.append((r["model"], ok))
    return checks


def _write_report(out, report):
    write_rows(out, ["key", "value"], [("passed", report.passed)]
               + [(k, report.values[k]) for k in sorted(report.values)])
    Path(out).with_suffix(".txt").write_text(report.to_text())


def run_completeness(cfg, out):
    model = build_model(cfg.model or {"variant": "fourier", "N": "16"})
    metric = build_metric(model, cfg.metric or {"s": "2"})
    rep = completeness_probe(metric, int(cfg.opt("samples", 20)), cfg.opt("T", 50.0), cfg.seed,
                             h=cfg.opt("h", 1e-2), drift_tol=cfg.opt("drift_tol", 1e-6))
    _write_report(out, rep)
    return [("completeness", rep.passed)]


def run_noloss(cfg, out):
    model = build_model(cfg.model or {"variant": "fourier", "N": "32"})
    metric = build_metric(model, cfg.metric or {"s": "2"})
    rate = cfg.opt("decay", -4.0)
    u0 = power_law_velocity(model, rate, make_rng(cfg.seed, 6), cfg.opt("amplitude", 1.0))
    rep = no_loss_no_gain_check(metric, u0, cfg.opt("T", 1.0), cfg.opt("h", 1e-3))
    write_rows(out, ["t", "curve_exponent", "velocity_exponent"],
               zip(rep.times, rep.curve_exponents, rep.velocity_exponents))
    within = bool(np.all(np.abs(rep.curve_exponents - rate) <= 0.5))
    return [("spread", rep.passed), ("within_half_of_rate", within)]


def power_law_velocity(model, rate, rng, amplitude=1.0):
    """Coefficients with |c(n)| = amplitude * n^rate and random phases."""
    n = model.modes
    ph = rng.uniform(0, 2 * np.pi, model.N)
    u = np.zeros(model.dim)
    u[1:model.N + 1] = amplitude * n**rate * np.cos(ph)
    u[model.N + 1:] = amplitude * n**rate * np.sin(ph)
    return u


def run_nondegeneracy(cfg, out):
    model = build_model(cfg.model)
    metric = build_metric(model, cfg.metric)
    rep = nondegeneracy_probe(metric, int(cfg.opt("samples", 100)), cfg.seed,
                              BVPOptions(restarts=int(cfg.opt("restarts", 1)), seed=cfg.seed))
    _write_report(out, rep)
    return [("nondegeneracy", rep.passed)]


RUNNERS = {
    "jets-selftest": run_jets,
    "group-validate": run_group_validate,
    "shoot": run_shoot,
    "bvp-distance": run_bvp,
    "curvature-table": run_curvature,
    "completeness": run_completeness,
    "noloss": run_noloss,
    "nondegeneracy": run_nondegeneracy,
}


def run(cfg: ExperimentConfig, out_dir=None) -> tuple[int, list]:
    """Run one experiment; returns (exit status, checks)."""
    out_dir = Path(out_dir or os.environ.get("HALFLIE_OUT") or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / cfg.output
    log.info("running %s (seed %d) -> %s", cfg.name, cfg.seed, path)
    checks = RUNNERS[cfg.name](cfg, path)
    for name, ok in checks:
        log.info("%-40s %s", name, "pass" if ok else "FAIL")
    return (0 if all(ok for _, ok in checks) else 1), checks


def catalog() -> list:
    return [{"name": k, "description": v, "anchor": ANCHORS[k]} for k, v in EXPERIMENTS.items()]
