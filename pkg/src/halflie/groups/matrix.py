"""Rotation groups SO(n) with coordinates on so(n)."""
from __future__ import annotations

from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.linalg import expm, logm

from .base import GroupModel


def hat3(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee3(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rotation2(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _so3_exp(v):
    th = np.linalg.norm(v)
    K = hat3(v)
    if th < 1e-8:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + np.sin(th) / th * K + (1 - np.cos(th)) / th**2 * K @ K


def _so3_log(R):
    c = np.clip((np.trace(R) - 1) / 2, -1.0, 1.0)
    th = np.arccos(c)
    if th < 1e-6:
        return vee3(R - R.T) / 2 * (1 + th**2 / 6)
    if np.pi - th < 1e-4:
        # near pi: axis from the symmetric part
        B = (R + np.eye(3)) / 2
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.sqrt(max(B[k, k], 1e-300))
        axis /= np.linalg.norm(axis)
        if np.dot(vee3(R - R.T), axis) < 0:
            axis = -axis
        return th * axis
    return vee3(R - R.T) * th / (2 * np.sin(th))


def _so3_dexp(v):
    th = np.linalg.norm(v)
    K = hat3(v)
    if th < 1e-5:
        return np.eye(3) + 0.5 * K + K @ K / 6
    return np.eye(3) + (1 - np.cos(th)) / th**2 * K + (th - np.sin(th)) / th**3 * K @ K


class MatrixGroup(GroupModel):
    """SO(n) acting by matrices; algebra coordinates in the basis E_ij - E_ji.

    For n = 3 the basis is the usual hat map, so ``hat(e1) @ hat(e2) -
    hat(e2) @ hat(e1) = hat(e3)``.
    """

    def __init__(self, n: int = 3):
        if n < 2:
            raise ValueError("SO(n) needs n >= 2")
        self.n = n
        self.dim = n * (n - 1) // 2
        self.variant = f"Matrix({n})"

    @cached_property
    def _basis(self):
        if self.n == 3:
            return np.stack([hat3(e) for e in np.eye(3)])
        out = []
        for i, j in combinations(range(self.n), 2):
            B = np.zeros((self.n, self.n))
            B[j, i], B[i, j] = 1.0, -1.0
            out.append(B)
        return np.stack(out)

    def hat(self, v):
        if self.n == 3:
            return hat3(v)
        return np.tensordot(np.asarray(v, float), self._basis, axes=1)

    def vee(self, m):
        if self.n == 3:
            return vee3(m)
        return np.einsum("kij,ij->k", self._basis, m) / 2

    def _identity(self):
        return np.eye(self.n)

    def _mul(self, a, b):
        return a @ b

    def _inv(self, a):
        return a.T.copy()

    def _exp(self, v):
        v = np.asarray(v, float)
        if self.n == 3:
            return _so3_exp(v)
        if self.n == 2:
            return rotation2(v[0])
        return expm(self.hat(v))

    def _chart(self, a):
        if self.n == 3:
            return _so3_log(a)
        if self.n == 2:
            return np.array([np.arctan2(a[1, 0], a[0, 0])])
        L = np.real(logm(a))
        return self.vee((L - L.T) / 2)

    _chart_inv = _exp

    def _bracket(self, X, Y):
        A, B = self.hat(X), self.hat(Y)
        return self.vee(A @ B - B @ A)

    def _Ad(self, a, X):
        return self.vee(a @ self.hat(X) @ a.T)

    def ad_matrix(self, X):
        """Matrix of ``Y -> [X, Y]`` in algebra coordinates."""
        return np.stack([self._bracket(X, e) for e in np.eye(self.dim)], axis=1)

    def _chart_jacobian(self, v):
        v = np.asarray(v, float)
        if self.n == 3:
            return _so3_dexp(v)
        if self.n == 2:
            return np.eye(1)
        # d exp(V + eB) exp(-V) via the block-triangular exponential
        V = self.hat(v)
        n = self.n
        cols = []
        for k in range(self.dim):
            big = np.zeros((2 * n, 2 * n))
            big[:n, :n] = V
            big[n:, n:] = V
            big[:n, n:] = self._basis[k]
            E = expm(big)
            cols.append(self.vee(E[:n, n:] @ E[:n, :n].T))
        return np.stack(cols, axis=1)

    def _contains(self, a, tol=1e-9):
        a = np.asarray(a, float)
        if a.shape != (self.n, self.n):
            return False
        return (np.max(np.abs(a.T @ a - np.eye(self.n))) <= tol
                and abs(np.linalg.det(a) - 1) <= tol)

    def _unflatten(self, flat):
        return np.asarray(flat, float).reshape(self.n, self.n)


SO3 = MatrixGroup(3)
SO2 = MatrixGroup(2)
