"""Right-invariant metrics, Euler-Arnold shooting and chart-based geodesics.

Sign convention.  ``ad_transpose(u, w)`` is defined by
``<A ad_transpose(u, w), v> = <A w, [u, v]>`` with the bracket of
:mod:`halflie.groups`.  With that bracket the right-trivialized velocity of a
geodesic satisfies ``u' = -ad_transpose(u, u)``; the Lagrangian equation in a
chart is ``c'' = Gamma_c(c', c')`` with
``g(Gamma(X, X), Y) = 1/2 dg(Y)(X, X) - dg(X)(X, Y)``.  Both integrators
produce the same curves (checked in the test-suite on SO(3) and a rigid body).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUp, ChartBoundary, ModelMismatch, SingularInertia, StepRejected
from .groups import AlgebraVector, FourierDiffeo, GroupPoint, MatrixGroup
from .groups.base import GroupModel
from .groups.flows import _dexpinv_matrix, regularity_decay
from .groups.semidirect import SemidirectProduct


class Metric:
    """Inertia operator A on the algebra of ``model``.

    ``gram`` is the matrix G with ``<A u, v> = u^T G v`` in algebra
    coordinates.  For FourierDiffeo the inner product is
    ``int_0^{2 pi} (A u) v dtheta`` with A the multiplier ``(1 + n^2)^s``.
    """

    def __init__(self, model: GroupModel, inertia=None, s: float | None = None):
        self.model = model
        if isinstance(model, FourierDiffeo):
            if s is None:
                raise ValueError("FourierDiffeo metrics need the Sobolev order s")
            if s < 0:
                raise ValueError("s must be >= 0")
            self.s = float(s)
            self.multiplier = model.sobolev_weights(self.s)
            w = np.pi * np.ones(model.dim)
            w[0] = 2 * np.pi
            self.gram = np.diag(w * self.multiplier)
        else:
            A = np.eye(model.dim) if inertia is None else np.asarray(inertia, float)
            if A.ndim == 1:
                A = np.diag(A)
            if A.shape != (model.dim, model.dim):
                raise ValueError(f"inertia must be {model.dim}x{model.dim}")
            if np.max(np.abs(A - A.T)) > 1e-12:
                raise ValueError("inertia is not symmetric")
            if np.min(np.linalg.eigvalsh(A)) <= 0:
                raise SingularInertia("inertia is not positive definite")
            self.s = None
            self.gram = A
        self._gram_inv = np.linalg.inv(self.gram)
        self.lambda_min = float(np.min(np.linalg.eigvalsh(self.gram)))

    @property
    def inertia(self):
        return self.gram if self.s is None else self.multiplier

    def inner(self, u, v) -> float:
        return float(np.asarray(u) @ self.gram @ np.asarray(v))

    def energy(self, u) -> float:
        return self.inner(u, u)

    def solve(self, b):
        return self._gram_inv @ b


def _coords(obj, model):
    if isinstance(obj, AlgebraVector):
        if obj.model is not model:
            raise ModelMismatch(f"{obj.model!r} is not {model!r}")
        return obj.coords
    return np.asarray(obj, float)


def metric_eval(metric: Metric, x: GroupPoint, v, w) -> float:
    """``<A u_v, u_w>`` for right-trivialized tangent vectors; x is unused."""
    if x is not None and x.model is not metric.model:
        raise ModelMismatch(f"{x.model!r} is not {metric.model!r}")
    return metric.inner(_coords(v, metric.model), _coords(w, metric.model))


def _adT(metric: Metric, u, w):
    model = metric.model
    if isinstance(model, FourierDiffeo):
        # z = A^-1 P(u m' + 2 u' m), m = A w
        m = metric.multiplier * w
        ug, dug = model.on_grid(u), model.on_grid(model.deriv_coeffs(u))
        mg, dmg = model.on_grid(m), model.on_grid(model.deriv_coeffs(m))
        return model.project(ug * dmg + 2 * dug * mg) / metric.multiplier
    if isinstance(model, MatrixGroup):
        B = model.ad_matrix(u)
    else:
        B = np.stack([model._bracket(u, e) for e in np.eye(model.dim)], axis=1)
    return metric.solve(B.T @ (metric.gram @ w))


def ad_transpose(metric: Metric, u, w) -> AlgebraVector:
    u_, w_ = _coords(u, metric.model), _coords(w, metric.model)
    return AlgebraVector(metric.model, _adT(metric, u_, w_))


def geodesic_rhs(metric: Metric, u):
    """Right-hand side of the Euler-Arnold equation for the velocity."""
    return -_adT(metric, u, u)


@dataclass(frozen=True, eq=False)
class GeodesicState:
    g: GroupPoint
    u: AlgebraVector

    def __post_init__(self):
        if self.g.model is not self.u.model:
            raise ModelMismatch("state point and velocity live on different models")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    energy: np.ndarray
    decay: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def max_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))

    def to_csv(self, path):
        model = self.states[0].g.model
        k = model.dim
        gdim = len(model._flatten(self.states[0].g.data))
        header = (["t", "energy"] + [f"u{i}" for i in range(k)]
                  + [f"g{i}" for i in range(gdim)])
        if self.decay is not None:
            header.append("decay_exponent")
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for i, (t, st) in enumerate(zip(self.times, self.states)):
                row = [t, self.energy[i], *st.u.coords, *model._flatten(st.g.data)]
                if self.decay is not None:
                    row.append(self.decay[i])
                wr.writerow([f"{v:.12e}" for v in row])


def shoot(metric: Metric, u0, T: float, h: float = 1e-3, g0: GroupPoint | None = None,
          record_every: int = 1, ceiling: float = 1e8) -> Trajectory:
    """Integrate ``u' = -ad_transpose(u, u)`` with the reconstruction ``g' = u g``.

    Matrix and semidirect models use a fourth-order Runge-Kutta-Munthe-Kaas
    step; FourierDiffeo advances the grid points of the diffeomorphism
    alongside the Fourier coefficients of u.
    """
    model = metric.model
    if h <= 0:
        raise ValueError("h must be positive")
    u = np.array(_coords(u0, model), float)
    n_steps = int(round(T / h))
    if n_steps < 0 or abs(n_steps * h - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError("T must be a non-negative multiple of h")
    fourier = isinstance(model, FourierDiffeo)
    if fourier:
        g = model._identity() if g0 is None else g0.data
        x = model.grid + model.on_grid(g)
    else:
        g = model._identity() if g0 is None else g0.data

    times, states, energy = [], [], []

    def record(t, gdata):
        times.append(t)
        states.append(GeodesicState(GroupPoint(model, gdata), AlgebraVector(model, u.copy())))
        energy.append(metric.energy(u))

    record(0.0, g)
    for step in range(1, n_steps + 1):
        if fourier:
            u, x = _fourier_rk4(metric, u, x, h)
            if not np.all(np.isfinite(x)):
                raise StepRejected("non-finite grid points")
        else:
            u, Omega = _rkmk4(metric, u, h)
            g = model._mul(model._exp(Omega), g)
        if not np.all(np.isfinite(u)):
            raise StepRejected("non-finite velocity")
        if np.sqrt(abs(metric.energy(u))) > ceiling:
            raise BlowUp(f"|u|_A exceeded {ceiling:g} at t = {step * h:.6g}")
        if step % record_every == 0 or step == n_steps:
            if fourier:
                g = model.project(x - model.grid)
            record(step * h, g)
    return Trajectory(np.array(times), states, np.array(energy))


def _rkmk4(metric, u, h):
    model = metric.model

    def f(uu, Om):
        return geodesic_rhs(metric, uu), _dexpinv_matrix(model, Om, uu)

    z = np.zeros(model.dim)
    k1u, k1o = f(u, z)
    k2u, k2o = f(u + h / 2 * k1u, h / 2 * k1o)
    k3u, k3o = f(u + h / 2 * k2u, h / 2 * k2o)
    k4u, k4o = f(u + h * k3u, h * k3o)
    return (u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
            h / 6 * (k1o + 2 * k2o + 2 * k3o + k4o))


def _fourier_rk4(metric, u, x, h):
    model = metric.model

    def f(uu, xx):
        return geodesic_rhs(metric, uu), model.synth(uu, xx)

    k1u, k1x = f(u, x)
    k2u, k2x = f(u + h / 2 * k1u, x + h / 2 * k1x)
    k3u, k3x = f(u + h / 2 * k2u, x + h / 2 * k2x)
    k4u, k4x = f(u + h * k3u, x + h * k3x)
    return (u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
            x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x))


class ChartAtlas:
    """Chart at e plus right-translated charts ``v -> tau(v) x``."""

    def __init__(self, model: GroupModel, radius: float | None = None):
        self.model = model
        if radius is None:
            if isinstance(model, MatrixGroup):
                radius = 3.0
            elif isinstance(model, SemidirectProduct):
                radius = 3.0 if isinstance(model.base, MatrixGroup) else np.inf
            else:
                radius = np.inf
        self.radius = radius

    def _base_norm(self, v):
        if isinstance(self.model, SemidirectProduct):
            return float(np.linalg.norm(v[: self.model.base.dim]))
        if isinstance(self.model, MatrixGroup):
            return float(np.linalg.norm(v))
        return 0.0

    def inside(self, v, margin=0.0) -> bool:
        return self._base_norm(v) + margin < self.radius

    def to_chart(self, p: GroupPoint, base: GroupPoint | None = None) -> np.ndarray:
        m = self.model
        d = p.data if base is None else m._mul(p.data, m._inv(base.data))
        return m._chart(d)

    def from_chart(self, v, base: GroupPoint | None = None) -> GroupPoint:
        m = self.model
        d = m._chart_inv(np.asarray(v, float))
        return GroupPoint(m, d if base is None else m._mul(d, base.data))

    def jacobian(self, v) -> np.ndarray:
        return self.model._chart_jacobian(np.asarray(v, float))

    def metric_matrix(self, metric: Metric, v) -> np.ndarray:
        J = self.jacobian(v)
        return J.T @ metric.gram @ J


def _chart_point(atlas, x):
    if isinstance(x, GroupPoint):
        return atlas.to_chart(x)
    return np.asarray(x, float)


def default_fd_step(v) -> float:
    return 1e-4 * (1 + float(np.linalg.norm(v)))


def _gamma_xx(metric, atlas, v, X, h):
    """Solve ``g Gamma = 1/2 grad(X^T g X) - (dg . X) X`` at chart point v."""
    n = len(v)
    G = atlas.metric_matrix(metric, v)
    rhs = np.zeros(n)
    # dg(e_k) by central differences
    dG = []
    for k in range(n):
        dv = np.zeros(n)
        dv[k] = h
        dG.append((atlas.metric_matrix(metric, v + dv) - atlas.metric_matrix(metric, v - dv)) / (2 * h))
    dG = np.stack(dG)
    rhs = 0.5 * np.einsum("kij,i,j->k", dG, X, X) - np.einsum("k,kij,j->i", X, dG, X)
    return np.linalg.solve(G, rhs)


def christoffel_fd(metric: Metric, atlas: ChartAtlas, x, X, Y=None, h: float | None = None):
    """Chart Christoffel symbol ``Gamma_x(X, Y)`` (polarized when Y is given)."""
    v = _chart_point(atlas, x)
    h = default_fd_step(v) if h is None else h
    if not atlas.inside(v, margin=h):
        raise ChartBoundary(f"stencil at |v| = {np.linalg.norm(v):.3f} leaves the chart")
    X = np.asarray(X, float)
    if Y is None:
        return _gamma_xx(metric, atlas, v, X, h)
    Y = np.asarray(Y, float)
    return 0.25 * (_gamma_xx(metric, atlas, v, X + Y, h) - _gamma_xx(metric, atlas, v, X - Y, h))


@dataclass
class ChartTrajectory:
    times: np.ndarray
    bases: list
    positions: np.ndarray
    velocities: np.ndarray

    def points(self, atlas: ChartAtlas) -> list:
        return [atlas.from_chart(c, b) for c, b in zip(self.positions, self.bases)]

    def right_trivialized(self, atlas: ChartAtlas) -> np.ndarray:
        return np.array([atlas.jacobian(c) @ w for c, w in zip(self.positions, self.velocities)])


def lagrangian_step(metric: Metric, atlas: ChartAtlas, state, T: float, h: float = 1e-3,
                    recenter_at: float | None = None, fd_step: float | None = None,
                    ceiling: float = 1e8) -> ChartTrajectory:
    """RK4 for ``c'' = Gamma_c(c', c')`` in right-translated charts.

    ``state`` is ``(x, xdot)``: a GroupPoint (or chart point) and its chart
    velocity.  The chart is re-centered by right translation when ``|c|``
    passes ``recenter_at``; the new chart velocity is ``J(c) c'``.
    """
    x, xdot = state
    base = x if isinstance(x, GroupPoint) else atlas.from_chart(x)
    c = np.zeros(metric.model.dim)
    w = np.asarray(xdot, float).copy()
    if recenter_at is None:
        recenter_at = 0.5 * atlas.radius if np.isfinite(atlas.radius) else np.inf
    n_steps = int(round(T / h))

    def acc(cc, ww):
        return christoffel_fd(metric, atlas, cc, ww, h=fd_step)

    times, bases, pos, vel = [0.0], [base], [c.copy()], [w.copy()]
    for step in range(1, n_steps + 1):
        k1c, k1w = w, acc(c, w)
        k2c, k2w = w + h / 2 * k1w, acc(c + h / 2 * k1c, w + h / 2 * k1w)
        k3c, k3w = w + h / 2 * k2w, acc(c + h / 2 * k2c, w + h / 2 * k2w)
        k4c, k4w = w + h * k3w, acc(c + h * k3c, w + h * k3w)
        c = c + h / 6 * (k1c + 2 * k2c + 2 * k3c + k4c)
        w = w + h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if not np.all(np.isfinite(w)) or np.linalg.norm(w) > ceiling:
            raise BlowUp(f"chart velocity blew up at t = {step * h:.6g}")
        if atlas._base_norm(c) > recenter_at:
            base = atlas.from_chart(c, base)
            w = atlas.jacobian(c) @ w
            c = np.zeros_like(c)
            if not atlas.inside(c + h * w):
                raise ChartBoundary("re-centering did not bring the curve into the chart")
        times.append(step * h)
        bases.append(base)
        pos.append(c.copy())
        vel.append(w.copy())
    return ChartTrajectory(np.array(times), bases, np.array(pos), np.array(vel))


@dataclass
class NoLossReport:
    times: np.ndarray
    curve_exponents: np.ndarray
    velocity_exponents: np.ndarray
    spread: float
    passed: bool
    skipped: bool = False
    trajectory: Trajectory | None = None


def no_loss_no_gain_check(metric: Metric, u0, T: float = 1.0, h: float = 1e-3,
                          tolerance: float = 0.5, fit_threshold: float = 0.5) -> NoLossReport:
    """Decay exponents along a geodesic at t in {0, T/4, T/2, 3T/4, T}.

    ``curve_exponents`` are measured on the group curve's coefficients for
    t > 0 and on u0 at t = 0 (the limit of g(t)/t).  The pass criterion uses
    their spread.  ``velocity_exponents`` (Eulerian u(t)) are diagnostic only:
    their least-squares fit is phase-sensitive at finite N.
    """
    model = metric.model
    if not isinstance(model, FourierDiffeo):
        raise TypeError("no_loss_no_gain_check needs a FourierDiffeo metric")
    u0 = _coords(u0, model)
    checkpoints = np.linspace(0.0, T, 5)
    if not np.any(u0):
        nan = np.full(5, np.nan)
        return NoLossReport(checkpoints, nan, nan, 0.0, True, skipped=True)
    slope0, resid0 = regularity_decay(u0, model)
    if resid0 > fit_threshold:
        raise ValueError(f"u0 has no clean decay exponent (fit residual {resid0:.3f})")
    n_steps = int(round(T / h))
    every = n_steps // 4
    if every < 1 or every * 4 != n_steps:
        raise ValueError("T / h must be a positive multiple of 4")
    traj = shoot(metric, u0, T, h, record_every=every)
    vel = np.array([regularity_decay(st.u.coords, model)[0] for st in traj.states])
    curve = np.array([slope0] + [regularity_decay(st.g.data, model)[0] for st in traj.states[1:]])
    spread = float(np.max(curve) - np.min(curve))
    traj.decay = curve
    return NoLossReport(traj.times, curve, vel, spread, spread <= tolerance, trajectory=traj)
