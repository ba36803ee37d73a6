"""Evolution of time-dependent controls, flow brackets and decay diagnostics."""
from __future__ import annotations

import numpy as np

from ..errors import FlowDiverged, HalfLieError, InsufficientModes, StepRejected
from .base import AlgebraVector, ControlPath, GroupPoint, _same_model
from .diffeo import FourierDiffeo
from .matrix import MatrixGroup


def _dexpinv_matrix(model, Omega, u):
    """Third-order truncation of the inverse right-trivialized dexp."""
    b1 = model._bracket(Omega, u)
    return u - 0.5 * b1 + model._bracket(Omega, b1) / 12.0


def evolve(xi: ControlPath, model=None, h: float = 1e-3, method: str = "midpoint") -> list:
    """Evol(xi) sampled at the control times.

    Each step left-multiplies by ``exp(h * xi)``.  ``method='rkmk4'`` is
    available for matrix models.  FourierDiffeo integrates the grid points of
    the flow with RK4 and projects only at the control times.
    """
    model = model or xi.model
    if xi.model is not model:
        _same_model(xi, GroupPoint(model, None))
    M = xi.n_intervals
    dt = 1.0 / M
    sub = int(round(dt / h))
    if sub < 1 or abs(sub * h - dt) > 1e-9 * dt:
        raise ValueError(f"step {h} does not divide the control spacing {dt}")
    if method not in ("midpoint", "rkmk4"):
        raise ValueError(f"unknown method {method!r}")
    if method == "rkmk4" and not isinstance(model, MatrixGroup):
        raise ValueError("rkmk4 is available for matrix models only")

    if isinstance(model, FourierDiffeo):
        return _evolve_fourier(xi, model, sub)

    g = model._identity()
    out = [GroupPoint(model, g)]
    for i in range(M):
        for j in range(sub):
            f0, f1 = j / sub, (j + 1) / sub
            if method == "midpoint":
                step = h * xi.interval_value(i, (f0 + f1) / 2)
            else:
                step = _rkmk4_step(model, xi, i, f0, f1, h)
            if not np.all(np.isfinite(step)):
                raise StepRejected("non-finite control value")
            g = model._mul(model._exp(step), g)
        out.append(GroupPoint(model, g))
    return out


def _rkmk4_step(model, xi, i, f0, f1, h):
    k1 = xi.interval_value(i, f0)
    mid = xi.interval_value(i, (f0 + f1) / 2)
    k2 = _dexpinv_matrix(model, 0.5 * h * k1, mid)
    k3 = _dexpinv_matrix(model, 0.5 * h * k2, mid)
    k4 = _dexpinv_matrix(model, h * k3, xi.interval_value(i, f1))
    return h * (k1 + 2 * k2 + 2 * k3 + k4) / 6


def _evolve_fourier(xi, model: FourierDiffeo, sub):
    M = xi.n_intervals
    x = model.grid.copy()
    out = [model.identity()]
    for i in range(M):
        # local time runs over [0, 1]; velocities scale by the interval length
        field = (lambda t, i=i: xi.interval_value(i, t) / M)
        x = model.flow_points(field, x, 0.0, 1.0, sub)
        if not np.all(np.isfinite(x)):
            raise FlowDiverged("flow left the finite range")
        c = model.project(x - model.grid)
        model._check(c)
        out.append(GroupPoint(model, c))
    return out


def _flow(model, X, s):
    """Time-1 flow of the constant control ``s X`` via evolve."""
    path = ControlPath(model, (s * X)[None, :], "constant")
    return evolve(path, model, h=1.0 / 8, method="midpoint")[-1].data


def _pullback_field(model, X, Y, s, eps=1e-4):
    """``(Fl^{R_X}_s)^* R_Y (e)`` in chart coordinates."""
    a = _flow(model, X, s)
    ainv = _flow(model, X, -s)
    # pulled-back right-invariant field at e: d/de chart(Fl_{-s} exp(eY) Fl_s)
    def central(e):
        plus = model._chart(model._mul(model._mul(ainv, model._chart_inv(e * Y)), a))
        minus = model._chart(model._mul(model._mul(ainv, model._chart_inv(-e * Y)), a))
        return (plus - minus) / (2 * e)

    # extrapolated in eps so the O(eps^2) term does not floor the t-convergence
    return (4 * central(eps / 2) - central(eps)) / 3


def flow_difference(X: AlgebraVector, Y: AlgebraVector, t: float) -> np.ndarray:
    """Central difference estimate ``-(V(t) - V(-t)) / 2t`` without extrapolation."""
    model = _same_model(X, Y)
    x, y = X.coords, Y.coords
    return -(_pullback_field(model, x, y, t) - _pullback_field(model, x, y, -t)) / (2 * t)


def bracket_via_flows(X: AlgebraVector, Y: AlgebraVector, t: float = 1e-2) -> AlgebraVector:
    """``[X, Y] = -d/dt (Fl^{R_X}_t)^* R_Y (e)``, Richardson-extrapolated in t."""
    model = _same_model(X, Y)
    try:
        d1 = flow_difference(X, Y, t)
        d2 = flow_difference(X, Y, t / 2)
    except (FloatingPointError, HalfLieError) as exc:
        raise FlowDiverged(str(exc)) from exc
    out = (4 * d2 - d1) / 3
    if not np.all(np.isfinite(out)):
        raise FlowDiverged("non-finite flow bracket")
    return AlgebraVector(model, out)


def regularity_decay(a, model: FourierDiffeo | None = None):
    """Slope of log|c(n)| against log n for modes in [N/4, N]."""
    if isinstance(a, (GroupPoint, AlgebraVector)):
        model = a.model
        coeffs = a.data if isinstance(a, GroupPoint) else a.coords
    else:
        coeffs = np.asarray(a, float)
    if not isinstance(model, FourierDiffeo):
        raise TypeError("regularity_decay needs a FourierDiffeo model")
    if model.N < 8:
        raise InsufficientModes(f"cutoff {model.N} < 8")
    amp = model.amplitudes(coeffs)
    n = model.modes
    keep = (n >= model.N / 4) & (amp > 1e-14)
    if keep.sum() < 3:
        raise InsufficientModes(f"only {int(keep.sum())} usable modes")
    x, y = np.log(n[keep]), np.log(amp[keep])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return float(slope), resid
