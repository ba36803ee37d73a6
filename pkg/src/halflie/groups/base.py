"""Common interface for the concrete group models.

Every model works on raw numpy data internally (methods prefixed with an
underscore) and exposes :class:`GroupPoint` / :class:`AlgebraVector`
wrappers publicly.  Algebra elements are coordinate vectors with respect to a
fixed basis of the tangent space at the identity.

Bracket convention: ``[X, Y] = -d/dt|_0 (Fl_t^{R_X})^* R_Y (e)`` where
``R_X(g) = T_e mu^g X`` is the right-invariant field.  For matrix groups this
is the commutator ``XY - YX``; for circle diffeomorphisms it is
``u' v - u v'``.  All other sign choices in the package follow from this one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ModelMismatch

FD_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class GroupPoint:
    model: "GroupModel"
    data: object

    def __mul__(self, other):
        return multiply(self, other)

    def inverse(self):
        return inverse(self)


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    model: "GroupModel"
    coords: np.ndarray

    def __post_init__(self):
        if np.shape(self.coords) != (self.model.dim,):
            raise ValueError(f"expected {self.model.dim} coordinates, got {np.shape(self.coords)}")

    def __add__(self, other):
        _same_model(self, other)
        return AlgebraVector(self.model, self.coords + other.coords)

    def __sub__(self, other):
        _same_model(self, other)
        return AlgebraVector(self.model, self.coords - other.coords)

    def __mul__(self, scalar):
        return AlgebraVector(self.model, scalar * self.coords)

    __rmul__ = __mul__

    def __neg__(self):
        return AlgebraVector(self.model, -self.coords)


def _same_model(*objs):
    first = objs[0].model
    for o in objs[1:]:
        if o.model is not first:
            raise ModelMismatch(f"{o.model!r} is not {first!r}")
    return first


class GroupModel:
    """Abstract group model.  Subclasses implement the raw-data methods."""

    variant = "abstract"
    dim: int

    # ---- raw interface -------------------------------------------------
    def _identity(self):
        raise NotImplementedError

    def _mul(self, a, b):
        raise NotImplementedError

    def _inv(self, a):
        raise NotImplementedError

    def _chart(self, a) -> np.ndarray:
        """Chart at the identity (log-like), derivative = id at e."""
        raise NotImplementedError

    def _chart_inv(self, v):
        raise NotImplementedError

    def _contains(self, a, tol=1e-9) -> bool:
        return True

    def _flatten(self, a) -> np.ndarray:
        return np.asarray(a, float).ravel()

    def _unflatten(self, flat):
        raise NotImplementedError

    def _exp(self, v):
        """One-parameter subgroup at time 1, by RK4 in the identity chart."""
        v = np.asarray(v, float)
        steps = 32
        w = np.zeros(self.dim)
        for _ in range(steps):
            k1 = self._right_field(v, w)
            k2 = self._right_field(v, w + 0.5 / steps * k1)
            k3 = self._right_field(v, w + 0.5 / steps * k2)
            k4 = self._right_field(v, w + 1.0 / steps * k3)
            w = w + (k1 + 2 * k2 + 2 * k3 + k4) / (6 * steps)
        return self._chart_inv(w)

    def _right_field(self, X, w):
        """Chart representation of R_X at the point with chart coordinates w."""
        a = self._chart_inv(w)
        e = FD_EPS
        return (self._chart(self._mul(self._chart_inv(e * X), a))
                - self._chart(self._mul(self._chart_inv(-e * X), a))) / (2 * e)

    def _bracket(self, X, Y):
        """Generic bracket from the quadratic part of the chart product."""
        e = 1e-4

        def prod(s, t):
            return self._chart(self._mul(self._chart_inv(s * X), self._chart_inv(t * Y)))

        mixed = (prod(e, e) - prod(e, -e) - prod(-e, e) + prod(-e, -e)) / (4 * e * e)

        def prod_rev(s, t):
            return self._chart(self._mul(self._chart_inv(t * Y), self._chart_inv(s * X)))

        mixed_rev = (prod_rev(e, e) - prod_rev(e, -e) - prod_rev(-e, e) + prod_rev(-e, -e)) / (4 * e * e)
        return mixed - mixed_rev

    def _Ad(self, a, X):
        """``d/de chart(a exp(eX) a^-1)`` by central differences."""
        ainv = self._inv(a)
        e = FD_EPS
        plus = self._chart(self._mul(self._mul(a, self._chart_inv(e * np.asarray(X))), ainv))
        minus = self._chart(self._mul(self._mul(a, self._chart_inv(-e * np.asarray(X))), ainv))
        return (plus - minus) / (2 * e)

    def _chart_jacobian(self, v) -> np.ndarray:
        """Right-trivialized differential of the chart inverse at ``v``.

        Column k is ``d/de chart(tau(v + e E_k) tau(v)^-1)``.
        """
        v = np.asarray(v, float)
        base_inv = self._inv(self._chart_inv(v))
        e = FD_EPS
        cols = []
        for k in range(self.dim):
            dv = np.zeros(self.dim)
            dv[k] = e
            plus = self._chart(self._mul(self._chart_inv(v + dv), base_inv))
            minus = self._chart(self._mul(self._chart_inv(v - dv), base_inv))
            cols.append((plus - minus) / (2 * e))
        return np.stack(cols, axis=1)

    def _distance(self, a, b) -> float:
        """Max-abs difference of the stored coordinates."""
        return float(np.max(np.abs(self._flatten(a) - self._flatten(b))))

    def _random(self, rng, scale=1.0):
        return self._chart_inv(scale * rng.standard_normal(self.dim))

    # ---- public wrappers -------------------------------------------------
    def point(self, data) -> GroupPoint:
        return GroupPoint(self, data)

    def vector(self, coords) -> AlgebraVector:
        return AlgebraVector(self, np.asarray(coords, float))

    def identity(self) -> GroupPoint:
        return GroupPoint(self, self._identity())

    def zero(self) -> AlgebraVector:
        return AlgebraVector(self, np.zeros(self.dim))

    def basis(self, k) -> AlgebraVector:
        c = np.zeros(self.dim)
        c[k] = 1.0
        return AlgebraVector(self, c)

    def exp(self, X: AlgebraVector) -> GroupPoint:
        _check_model(self, X)
        return GroupPoint(self, self._exp(X.coords))

    def chart(self, a: GroupPoint) -> np.ndarray:
        _check_model(self, a)
        return self._chart(a.data)

    def chart_inv(self, v) -> GroupPoint:
        return GroupPoint(self, self._chart_inv(np.asarray(v, float)))

    def contains(self, a: GroupPoint, tol=1e-9) -> bool:
        _check_model(self, a)
        return self._contains(a.data, tol)

    def random_point(self, rng, scale=1.0) -> GroupPoint:
        return GroupPoint(self, self._random(rng, scale))

    def random_vector(self, rng, scale=1.0) -> AlgebraVector:
        return AlgebraVector(self, scale * rng.standard_normal(self.dim))

    def distance(self, a: GroupPoint, b: GroupPoint) -> float:
        _same_model(a, b)
        return self._distance(a.data, b.data)

    def Ad(self, a: GroupPoint, X: AlgebraVector) -> AlgebraVector:
        _same_model(a, X)
        return AlgebraVector(self, self._Ad(a.data, X.coords))

    def __repr__(self):
        return f"{type(self).__name__}({self.variant})"


def _check_model(model, obj):
    if obj.model is not model:
        raise ModelMismatch(f"{obj.model!r} is not {model!r}")


def multiply(a: GroupPoint, b: GroupPoint) -> GroupPoint:
    model = _same_model(a, b)
    return GroupPoint(model, model._mul(a.data, b.data))


def inverse(a: GroupPoint) -> GroupPoint:
    return GroupPoint(a.model, a.model._inv(a.data))


def bracket(X: AlgebraVector, Y: AlgebraVector) -> AlgebraVector:
    model = _same_model(X, Y)
    return AlgebraVector(model, model._bracket(X.coords, Y.coords))


@dataclass(frozen=True, eq=False)
class ControlPath:
    """Time-discretized control on [0, 1].

    ``interpolation='constant'``: M samples, sample i acts on
    ``[i/M, (i+1)/M)``.  ``'linear'``: M + 1 node values at ``i/M``.
    """

    model: GroupModel
    samples: np.ndarray
    interpolation: str = "constant"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, float)
        if s.ndim != 2 or s.shape[1] != self.model.dim:
            raise ValueError(f"samples must have shape (K, {self.model.dim})")
        if self.interpolation not in ("constant", "linear"):
            raise ValueError("interpolation must be 'constant' or 'linear'")
        if self.n_intervals < 1:
            raise ValueError("a control path needs at least one interval")
        object.__setattr__(self, "samples", s)

    @classmethod
    def constant(cls, X: AlgebraVector, intervals=1) -> "ControlPath":
        return cls(X.model, np.tile(X.coords, (intervals, 1)), "constant")

    @property
    def n_intervals(self) -> int:
        k = len(self.samples)
        return k if self.interpolation == "constant" else k - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_intervals + 1)

    def __call__(self, t: float) -> np.ndarray:
        M = self.n_intervals
        if self.interpolation == "constant":
            i = min(int(np.floor(t * M + 1e-12)), M - 1)
            return self.samples[max(i, 0)]
        x = np.clip(t * M, 0, M)
        i = min(int(np.floor(x)), M - 1)
        w = x - i
        return (1 - w) * self.samples[i] + w * self.samples[i + 1]

    def interval_value(self, i: int, frac: float) -> np.ndarray:
        """Value at relative position ``frac`` inside interval i."""
        if self.interpolation == "constant":
            return self.samples[i]
        return (1 - frac) * self.samples[i] + frac * self.samples[i + 1]
