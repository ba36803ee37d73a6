"""Right semidirect products G ⋉_ρ R^d.

Group law ``(g1, h1)(g2, h2) = (g1 g2, rho(g2)^-1 h1 + h2)``.  The chart is
``(log g, h)``, which differs from the group exponential.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .base import FD_EPS, GroupModel
from .matrix import MatrixGroup


class SemidirectProduct(GroupModel):
    def __init__(self, base: GroupModel, rho, fiber_dim: int, drho=None, name="custom"):
        self.base = base
        self.rho = rho
        self.fiber_dim = fiber_dim
        self._drho_user = drho
        self.dim = base.dim + fiber_dim
        self.variant = f"Semidirect({base.variant},{name},{fiber_dim})"
        self.rep_name = name

    @classmethod
    def rotation(cls, n=3):
        """SO(n) ⋉ R^n with the defining representation."""
        base = MatrixGroup(n)
        return cls(base, lambda g: g, n, drho=base.hat, name="rotation")

    @classmethod
    def trivial(cls, base: GroupModel, fiber_dim: int):
        return cls(base, lambda g: np.eye(fiber_dim), fiber_dim,
                   drho=lambda xi: np.zeros((fiber_dim, fiber_dim)), name="trivial")

    def drho(self, xi):
        if self._drho_user is not None:
            return np.asarray(self._drho_user(np.asarray(xi, float)), float)
        e = FD_EPS
        b = self.base
        return (self.rho(b._exp(e * np.asarray(xi))) - self.rho(b._exp(-e * np.asarray(xi)))) / (2 * e)

    def split(self, v):
        v = np.asarray(v, float)
        return v[: self.base.dim], v[self.base.dim:]

    def _identity(self):
        return (self.base._identity(), np.zeros(self.fiber_dim))

    def _mul(self, a, b):
        g1, h1 = a
        g2, h2 = b
        return (self.base._mul(g1, g2), self.rho(self.base._inv(g2)) @ h1 + h2)

    def _inv(self, a):
        g, h = a
        return (self.base._inv(g), -(self.rho(g) @ h))

    def _exp(self, v):
        xi, eta = self.split(v)
        d = self.fiber_dim
        big = np.zeros((d + 1, d + 1))
        big[:d, :d] = -self.drho(xi)
        big[:d, d] = eta
        # int_0^1 exp(-s drho(xi)) eta ds
        return (self.base._exp(xi), expm(big)[:d, d])

    def _chart(self, a):
        g, h = a
        return np.concatenate([self.base._chart(g), np.asarray(h, float)])

    def _chart_inv(self, v):
        xi, eta = self.split(v)
        return (self.base._chart_inv(xi), eta.copy())

    def _bracket(self, X, Y):
        x1, h1 = self.split(X)
        x2, h2 = self.split(Y)
        return np.concatenate([self.base._bracket(x1, x2),
                               self.drho(x1) @ h2 - self.drho(x2) @ h1])

    def _chart_jacobian(self, v):
        xi, _ = self.split(v)
        J = np.zeros((self.dim, self.dim))
        k = self.base.dim
        J[:k, :k] = self.base._chart_jacobian(xi)
        J[k:, k:] = self.rho(self.base._exp(xi))
        return J

    def _contains(self, a, tol=1e-9):
        g, h = a
        return self.base._contains(g, tol) and np.shape(h) == (self.fiber_dim,)

    def _flatten(self, a):
        g, h = a
        return np.concatenate([self.base._flatten(g), np.asarray(h, float)])

    def _unflatten(self, flat):
        flat = np.asarray(flat, float)
        return (self.base._unflatten(flat[: -self.fiber_dim]), flat[-self.fiber_dim:])
