"""Fourier-truncated diffeomorphisms of the circle.

A point is ``phi(theta) = theta + f(theta)`` with ``f`` stored as the real
coefficient vector ``[a0, a1..aN, b1..bN]``.  Algebra elements ``u(theta)
d/dtheta`` use the same layout.  Products are evaluated on a 4N-point grid
and projected back to modes <= N, so associativity holds only up to the
truncation error.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import NotADiffeomorphism, NotInvertible
from .base import GroupModel


class FourierDiffeo(GroupModel):
    newton_iters = 50

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("mode cutoff must be >= 1")
        self.N = N
        self.dim = 2 * N + 1
        self.M = 4 * N
        self.variant = f"FourierDiffeo({N})"

    @cached_property
    def grid(self):
        return 2 * np.pi * np.arange(self.M) / self.M

    @cached_property
    def check_grid(self):
        K = 8 * self.N
        return 2 * np.pi * np.arange(K) / K

    @cached_property
    def modes(self):
        return np.arange(1, self.N + 1)

    # ---- spectral helpers ------------------------------------------------
    def coeffs(self, c):
        c = np.asarray(c, float)
        return c[0], c[1:self.N + 1], c[self.N + 1:]

    def synth(self, c, x):
        """Evaluate the trigonometric polynomial with coefficients c at x."""
        a0, a, b = self.coeffs(c)
        nx = np.multiply.outer(np.asarray(x, float), self.modes)
        return a0 + np.cos(nx) @ a + np.sin(nx) @ b

    def deriv_coeffs(self, c):
        a0, a, b = self.coeffs(c)
        n = self.modes
        return np.concatenate([[0.0], n * b, -n * a])

    def project(self, values):
        """Coefficients (modes <= N) of samples on the 4N grid."""
        F = np.fft.rfft(values)
        M = self.M
        a0 = F[0].real / M
        a = 2 * F[1:self.N + 1].real / M
        b = -2 * F[1:self.N + 1].imag / M
        return np.concatenate([[a0], a, b])

    def on_grid(self, c):
        return self.synth(c, self.grid)

    def min_slope(self, c):
        """min(1 + f') on the verification grid."""
        return float(np.min(1 + self.synth(self.deriv_coeffs(c), self.check_grid)))

    def amplitudes(self, c):
        _, a, b = self.coeffs(c)
        return np.hypot(a, b)

    def sobolev_weights(self, s):
        n = self.modes
        lam = (1.0 + n.astype(float) ** 2) ** s
        return np.concatenate([[1.0], lam, lam])

    # ---- group structure ---------------------------------------------------
    def _identity(self):
        return np.zeros(self.dim)

    def _check(self, c):
        if self.min_slope(c) <= 0:
            raise NotADiffeomorphism(f"min(1+f') = {self.min_slope(c):.3e} <= 0")
        return c

    def _mul(self, a, b):
        # (a . b)(theta) = a(b(theta)), f_ab = f_b + f_a(theta + f_b)
        fb = self.on_grid(b)
        vals = fb + self.synth(a, self.grid + fb)
        return self._check(self.project(vals))

    def _inv(self, a):
        x = self.grid - self.on_grid(a)
        dc = self.deriv_coeffs(a)
        for _ in range(self.newton_iters):
            r = x + self.synth(a, x) - self.grid
            x = x - r / (1 + self.synth(dc, x))
            if np.max(np.abs(r)) < 1e-14:
                break
        else:
            r = x + self.synth(a, x) - self.grid
            if np.max(np.abs(r)) > 1e-10:
                raise NotInvertible(f"Newton residual {np.max(np.abs(r)):.3e}")
        return self._check(self.project(x - self.grid))

    def flow_points(self, field, x0, t0, t1, steps):
        """RK4 for ``x' = u(t, x)`` with ``u`` given as coefficient callable."""
        x = np.array(x0, float)
        h = (t1 - t0) / steps
        t = t0
        for _ in range(steps):
            k1 = self.synth(field(t), x)
            k2 = self.synth(field(t + h / 2), x + h / 2 * k1)
            k3 = self.synth(field(t + h / 2), x + h / 2 * k2)
            k4 = self.synth(field(t + h), x + h * k3)
            x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        return x

    def flow_steps(self, u, T=1.0):
        scale = np.sum(np.abs(u) * np.concatenate([[0.0], self.modes, self.modes]))
        return int(max(16, np.ceil(40 * abs(T) * (scale + np.max(np.abs(u))))))

    def _exp(self, v):
        v = np.asarray(v, float)
        x = self.flow_points(lambda t: v, self.grid, 0.0, 1.0, self.flow_steps(v))
        return self._check(self.project(x - self.grid))

    def _chart(self, a):
        return np.asarray(a, float).copy()

    def _chart_inv(self, v):
        return self._check(np.asarray(v, float).copy())

    def _bracket(self, X, Y):
        u, v = self.on_grid(X), self.on_grid(Y)
        du, dv = self.on_grid(self.deriv_coeffs(X)), self.on_grid(self.deriv_coeffs(Y))
        return self.project(du * v - u * dv)

    def _contains(self, a, tol=1e-9):
        return np.shape(a) == (self.dim,) and self.min_slope(a) > 0

    def _unflatten(self, flat):
        return np.asarray(flat, float)

    def _random(self, rng, scale=1.0):
        # decaying coefficients, rescaled until the slope condition holds
        w = 1.0 / self.sobolev_weights(1.0)
        c = scale * rng.standard_normal(self.dim) * w
        while self.min_slope(c) <= 0.2:
            c *= 0.5
        return c

    def random_vector(self, rng, scale=1.0):
        w = 1.0 / self.sobolev_weights(1.0)
        return self.vector(scale * rng.standard_normal(self.dim) * w)
