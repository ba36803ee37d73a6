import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from halflie.errors import InsufficientModes, ModelMismatch, NotADiffeomorphism
from halflie.groups import (SO3, ControlPath, FourierDiffeo, MatrixGroup, SemidirectProduct,
                            bracket, bracket_via_flows, control_from_record, control_to_record,
                            evolve, heisenberg, heisenberg_datum, multiply, point_from_record,
                            point_to_record, regularity_decay, rotation2, split_datum,
                            validate_extension_datum, VectorGroup)

SE2 = SemidirectProduct.rotation(2)
SE3 = SemidirectProduct.rotation(3)
F8 = FourierDiffeo(8)
HEIS = heisenberg()
seeds = st.integers(0, 2**32 - 1)


def gen(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def close(model, a, b, tol=1e-9):
    return model.distance(a, b) <= tol


# -- worked values ----------------------------------------------------------

def test_semidirect_multiply_example():
    a = SE2.point((rotation2(np.pi / 2), np.array([1.0, 0.0])))
    b = SE2.point((rotation2(np.pi / 2), np.zeros(2)))
    g, h = (a * b).data
    assert np.allclose(g, rotation2(np.pi), atol=1e-15)
    assert np.allclose(h, [0, -1], atol=1e-15)


def test_semidirect_inverse_example():
    a = SE2.point((rotation2(np.pi / 2), np.array([1.0, 0.0])))
    g, h = a.inverse().data
    assert np.allclose(g, rotation2(-np.pi / 2))
    assert np.allclose(h, [0, -1])
    assert close(SE2, a.inverse() * a, SE2.identity(), 1e-15)


def test_heisenberg_examples():
    a = HEIS.point((np.array([1.0, 0.0]), np.array([0.0])))
    b = HEIS.point((np.array([0.0, 1.0]), np.array([0.0])))
    x, m = (a * b).data
    assert np.allclose(x, [1, 1]) and np.allclose(m, [1])
    x, m = HEIS.point((np.array([2.0, 3.0]), np.array([5.0]))).inverse().data
    assert np.allclose(x, [-2, -3]) and np.allclose(m, [-5 + 6])


def test_identity_cases():
    for model in (SO3, SE3, F8, HEIS):
        b = model.random_point(gen(1), 0.2)
        e = model.identity()
        assert close(model, e * b, b, 1e-12) and close(model, b * e, b, 1e-12)
        assert close(model, e.inverse(), e, 1e-15)


def test_so3_bracket_example():
    assert np.allclose(bracket(SO3.basis(0), SO3.basis(1)).coords, [0, 0, 1])


def test_fourier_bracket_example():
    # bracket(cos, sin) = u'v - uv' = -sin^2 - cos^2 = -1 under the flow convention
    m = FourierDiffeo(4)
    u = m.vector(np.eye(9)[1])
    v = m.vector(np.eye(9)[5])
    assert np.allclose(bracket(u, v).coords, -np.eye(9)[0], atol=1e-13)


def test_bracket_via_flows_examples():
    assert np.allclose(bracket_via_flows(SO3.basis(0), SO3.basis(1)).coords, [0, 0, 1], atol=1e-3)
    X = SO3.vector([0.3, -0.2, 0.5])
    assert np.allclose(bracket_via_flows(X, X).coords, 0, atol=1e-9)
    k1, k2 = SE3.vector([0, 0, 0, 1, 2, 3]), SE3.vector([0, 0, 0, -1, 0, 4])
    assert np.allclose(bracket_via_flows(k1, k2).coords, 0, atol=1e-9)


def test_evolve_examples():
    assert all(close(SO3, g, SO3.identity(), 0) for g in evolve(ControlPath.constant(SO3.zero(), 4)))
    xi = SO3.vector([0, 0, np.pi / 2])
    g = evolve(ControlPath.constant(xi), h=1e-3)[-1]
    assert np.allclose(g.data, expm(SO3.hat(xi.coords)), atol=1e-8)
    assert np.allclose(g.data, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-8)
    v = np.array([1.0, -2.0, 0.5])
    curve = evolve(ControlPath.constant(SE3.vector(np.r_[0, 0, 0, v]), 4), h=1e-2)
    for t, g in zip(np.linspace(0, 1, 5), curve):
        assert np.allclose(g.data[0], np.eye(3)) and np.allclose(g.data[1], t * v)


def test_regularity_decay_examples():
    m = FourierDiffeo(32)
    n = m.modes.astype(float)
    slope, resid = regularity_decay(np.r_[0, n ** -3.0, np.zeros(32)], m)
    assert slope == pytest.approx(-3.0, abs=0.01) and resid < 1e-10
    slope, _ = regularity_decay(np.r_[0, n ** -3.0 * (1 + 0.1 * np.sin(n)), np.zeros(32)], m)
    assert slope == pytest.approx(-3.0, abs=0.2)
    with pytest.raises(InsufficientModes):
        regularity_decay(np.r_[0, 1.0, np.zeros(63)], m)
    with pytest.raises(InsufficientModes):
        regularity_decay(np.zeros(9), FourierDiffeo(4))


def test_validator_examples():
    R1, R2 = VectorGroup(1), VectorGroup(2)
    ok = validate_extension_datum(heisenberg_datum(), R1, R2, 100, seed=3, dyadic=10)
    assert ok.passed and max(ok.residuals.values()) == 0.0
    assert validate_extension_datum(heisenberg_datum(), R1, R2, 100, seed=3).passed
    bad = validate_extension_datum(heisenberg_datum(True), R1, R2, 100, seed=3, dyadic=10)
    assert not bad.passed
    want = [2 * abs(x[1] * y[1] * z[1]) for x, y, z in bad.samples]
    assert np.array_equal(bad.per_sample["central_cocycle"], want)
    assert np.array_equal(bad.per_sample["twisted_cocycle"], want)
    so3 = MatrixGroup(3)
    split = validate_extension_datum(split_datum(so3, lambda R: R, 3), VectorGroup(3), so3, 50, seed=1)
    assert split.passed


# -- group axioms ------------------------------------------------------------

MODELS = [SO3, MatrixGroup(4), SE2, SE3, HEIS]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.variant)
@given(seed=seeds)
def test_associativity_and_inverse(model, seed):
    rng = gen(seed)
    a, b, c = (model.random_point(rng) for _ in range(3))
    assert close(model, (a * b) * c, a * (b * c), 1e-10)
    assert close(model, a.inverse() * a, model.identity(), 1e-10)
    assert close(model, a * a.inverse(), model.identity(), 1e-10)
    assert model.contains(a * b, 1e-9)


def analytic_point(m, k, amp=0.1):
    c = np.zeros(m.dim)
    c[1:m.N + 1] = amp * np.exp(-(k + 1) * m.modes / 2.0)
    c[m.N + 1:] = amp * np.exp(-(k + 2) * m.modes / 3.0)
    return m.point(c)


def test_fourier_axioms_converge_with_cutoff():
    # projection after each product is lossy; the defects decay spectrally in N
    assoc, inv = [], []
    for N in (8, 16, 32):
        m = FourierDiffeo(N)
        a, b, c = (analytic_point(m, k) for k in range(3))
        assoc.append(m.distance((a * b) * c, a * (b * c)))
        inv.append(m.distance(a.inverse() * a, m.identity()))
        assert m.contains(a * b)
    assert assoc[0] > assoc[1] > assoc[2] and assoc[2] < 1e-7
    assert inv[0] > inv[1] > inv[2] and inv[2] < 1e-6


@given(seed=seeds)
def test_fourier_associativity_bounded(seed):
    rng = gen(seed)
    a, b, c = (F8.random_point(rng, 0.1) for _ in range(3))
    assert close(F8, (a * b) * c, a * (b * c), 1e-3)


def random_analytic_point(model, rng, scale=0.1):
    n = np.concatenate([[0], model.modes, model.modes])
    return model.point(scale * rng.standard_normal(model.dim) * np.exp(-n))


@given(seed=seeds)
def test_fourier_inverse_two_sided(seed):
    # analytic data keeps the truncated tail of the inverse below the bound
    F16 = FourierDiffeo(16)
    a = random_analytic_point(F16, gen(seed))
    assert close(F16, a.inverse() * a, F16.identity(), 1e-6)
    assert close(F16, a * a.inverse(), F16.identity(), 1e-6)


@given(seed=seeds)
def test_fourier_inverse_converges_with_cutoff(seed):
    # one diffeomorphism from the default sampler, zero-padded into larger cutoffs
    c = F8.random_point(gen(seed), 0.1).data
    defects = []
    for N in (8, 16, 32):
        F = FourierDiffeo(N)
        pad = np.zeros(N - 8)
        a = F.point(np.concatenate([c[:1], c[1:9], pad, c[9:], pad]))
        defects.append(F.distance(a.inverse() * a, F.identity()))
    assert defects[2] < defects[1] < defects[0]


@pytest.mark.parametrize("model", [SO3, MatrixGroup(4), SE3, F8], ids=lambda m: m.variant)
@given(seed=seeds)
def test_bracket_is_a_lie_bracket(model, seed):
    rng = gen(seed)
    X, Y, Z = (model.random_vector(rng) for _ in range(3))
    a, b = rng.normal(size=2)
    br = lambda p, q: bracket(p, q).coords
    assert np.allclose(br(a * X + b * Y, Z), a * br(X, Z) + b * br(Y, Z), atol=1e-10)
    assert np.allclose(br(X, Y), -br(Y, X), atol=1e-12)
    if not isinstance(model, FourierDiffeo):  # truncation breaks Jacobi at finite N
        jac = br(X, bracket(Y, Z)) + br(Y, bracket(Z, X)) + br(Z, bracket(X, Y))
        assert np.allclose(jac, 0, atol=1e-10)


def test_fourier_jacobi_defect_shrinks_with_cutoff():
    # fixed smooth fields; the truncation defect in Jacobi decreases as N grows
    defects = []
    for N in (8, 16, 32):
        m = FourierDiffeo(N)
        vecs = []
        for k in range(3):
            c = np.zeros(2 * N + 1)
            c[1:N + 1] = np.exp(-(k + 1) * m.modes / 2.0)
            c[N + 1:] = np.exp(-(k + 2) * m.modes / 3.0)
            vecs.append(m.vector(c))
        X, Y, Z = vecs
        jac = (bracket(X, bracket(Y, Z)).coords + bracket(Y, bracket(Z, X)).coords
               + bracket(Z, bracket(X, Y)).coords)
        defects.append(np.max(np.abs(jac)))
    assert defects[0] > defects[1] > defects[2] and defects[2] < 1e-5


def test_semidirect_bracket_formula(rng):
    x1, x2 = SE3.random_vector(rng), SE3.random_vector(rng)
    out = bracket(x1, x2).coords
    xi1, h1 = x1.coords[:3], x1.coords[3:]
    xi2, h2 = x2.coords[:3], x2.coords[3:]
    assert np.allclose(out[:3], np.cross(xi1, xi2))
    assert np.allclose(out[3:], SE3.drho(xi1) @ h2 - SE3.drho(xi2) @ h1)


@pytest.mark.parametrize("model", [SO3, SE3, FourierDiffeo(16)], ids=lambda m: m.variant)
def test_flow_bracket_matches_bracket(model, rng):
    scale = 0.3 if isinstance(model, FourierDiffeo) else 1.0
    X, Y = model.random_vector(rng, scale), model.random_vector(rng, scale)
    assert np.allclose(bracket_via_flows(X, Y).coords, bracket(X, Y).coords, atol=1e-3 * scale)


def test_evolve_concatenation_and_order(rng):
    # piecewise-constant control: Evol equals the ordered product of exponentials
    samples = rng.normal(size=(4, 3))
    path = ControlPath(SO3, samples)
    curve = evolve(path, h=1e-2)
    g = np.eye(3)
    for s in samples:
        g = expm(SO3.hat(s / 4)) @ g
    assert np.allclose(curve[-1].data, g, atol=1e-12)
    # linear interpolation: halving h quarters the error
    lin = ControlPath(SO3, rng.normal(size=(3, 3)), "linear")
    ref = evolve(lin, h=1e-4, method="rkmk4")[-1]
    errs = [SO3.distance(evolve(lin, h=h)[-1], ref) for h in (1 / 20, 1 / 40)]
    assert np.log2(errs[0] / errs[1]) >= 1.8


def test_evolve_fourier_constant_matches_exp(rng):
    X = F8.random_vector(rng, 0.05)
    g = evolve(ControlPath.constant(X, 2), h=1 / 64)[-1]
    assert close(F8, g, F8.exp(X), 1e-6)


def test_evolve_rejects_bad_step():
    with pytest.raises(ValueError):
        evolve(ControlPath.constant(SO3.zero(), 3), h=0.3)


# -- failure modes and records ---------------------------------------------

def test_model_mismatch():
    with pytest.raises(ModelMismatch):
        multiply(SO3.identity(), MatrixGroup(3).identity())
    with pytest.raises(ModelMismatch):
        bracket(SO3.basis(0), SE3.basis(0))


def test_fourier_composition_leaving_the_group():
    m = FourierDiffeo(4)
    c = np.zeros(9)
    c[1 + 4 + 1] = 0.45  # f = 0.45 sin 2θ, slope 1 + 0.9 cos 2θ > 0
    a = m.point(c)
    with pytest.raises(NotADiffeomorphism):
        a * a * a * a


def test_records_round_trip(rng):
    for model in (SO3, SE3, SemidirectProduct.trivial(MatrixGroup(3), 2), F8, HEIS):
        p = model.random_point(rng, 0.2)
        rec = json.loads(json.dumps(point_to_record(p)))
        q = point_from_record(rec)
        assert q.model.variant == model.variant
        assert np.array_equal(q.model._flatten(q.data), model._flatten(p.data))
    path = ControlPath(SO3, rng.normal(size=(3, 3)), "linear")
    back = control_from_record(json.loads(json.dumps(control_to_record(path))))
    assert back.interpolation == "linear" and np.array_equal(back.samples, path.samples)
