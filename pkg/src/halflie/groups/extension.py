"""Extension groups E(alpha, f) built from a base model G and a fiber model N."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .base import GroupModel


class VectorGroup(GroupModel):
    """Additive group R^d."""

    def __init__(self, d: int):
        self.dim = d
        self.variant = f"Vector({d})"

    def _identity(self):
        return np.zeros(self.dim)

    def _mul(self, a, b):
        return np.asarray(a, float) + np.asarray(b, float)

    def _inv(self, a):
        return -np.asarray(a, float)

    def _exp(self, v):
        return np.asarray(v, float).copy()

    _chart = _exp
    _chart_inv = _exp

    def _bracket(self, X, Y):
        return np.zeros(self.dim)

    def _Ad(self, a, X):
        return np.asarray(X, float).copy()

    def _chart_jacobian(self, v):
        return np.eye(self.dim)

    def _unflatten(self, flat):
        return np.asarray(flat, float)


@dataclass(frozen=True)
class ExtensionDatum:
    """``alpha(m, y)`` is the twist ``alpha^y(m)``; ``f(x, y)`` the cocycle."""

    alpha: Callable
    f: Callable
    central: bool = False
    fiber_abelian: bool = False
    name: str = "custom"


class ExtensionGroup(GroupModel):
    """``(x, m)(y, n) = (xy, f(x, y) alpha^y(m) n)``."""

    def __init__(self, base: GroupModel, fiber: GroupModel, datum: ExtensionDatum):
        self.base = base
        self.fiber = fiber
        self.datum = datum
        self.dim = base.dim + fiber.dim
        self.variant = f"Extension({base.variant},{fiber.variant},{datum.name})"

    def _identity(self):
        return (self.base._identity(), self.fiber._identity())

    def _mul(self, a, b):
        x, m = a
        y, n = b
        N = self.fiber
        twisted = N._mul(N._mul(self.datum.f(x, y), self.datum.alpha(m, y)), n)
        return (self.base._mul(x, y), twisted)

    def _inv(self, a):
        x, m = a
        N = self.fiber
        xi = self.base._inv(x)
        return (xi, N._mul(self.datum.alpha(N._inv(m), xi), N._inv(self.datum.f(x, xi))))

    def _chart(self, a):
        x, m = a
        return np.concatenate([self.base._chart(x), self.fiber._chart(m)])

    def _chart_inv(self, v):
        v = np.asarray(v, float)
        k = self.base.dim
        return (self.base._chart_inv(v[:k]), self.fiber._chart_inv(v[k:]))

    def _contains(self, a, tol=1e-9):
        x, m = a
        return self.base._contains(x, tol) and self.fiber._contains(m, tol)

    def _flatten(self, a):
        x, m = a
        return np.concatenate([self.base._flatten(x), self.fiber._flatten(m)])

    def _unflatten(self, flat):
        flat = np.asarray(flat, float)
        k = len(self.base._flatten(self.base._identity()))
        return (self.base._unflatten(flat[:k]), self.fiber._unflatten(flat[k:]))


def heisenberg_datum(perturbed: bool = False) -> ExtensionDatum:
    """Central datum on R^2 x R with ``f((a,b),(c,d)) = a d`` (+ ``b d^2``)."""

    def f(x, y):
        val = x[0] * y[1]
        if perturbed:
            val = val + x[1] * y[1] ** 2
        return np.array([val])

    return ExtensionDatum(alpha=lambda m, y: np.asarray(m, float), f=f, central=True,
                          fiber_abelian=True,
                          name="heisenberg-perturbed" if perturbed else "heisenberg")


def heisenberg(perturbed: bool = False) -> ExtensionGroup:
    return ExtensionGroup(VectorGroup(2), VectorGroup(1), heisenberg_datum(perturbed))


def split_datum(base: GroupModel, rho, fiber_dim: int) -> ExtensionDatum:
    """Semidirect product as an extension: ``alpha^y(m) = rho(y)^-1 m``, f = e."""
    return ExtensionDatum(alpha=lambda m, y: rho(base._inv(y)) @ np.asarray(m, float),
                          f=lambda x, y: np.zeros(fiber_dim), fiber_abelian=True,
                          name="split")


@dataclass
class ValidationReport:
    residuals: dict
    per_sample: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return all(r <= self.tol for r in self.residuals.values())


def validate_extension_datum(datum: ExtensionDatum, fiber: GroupModel, base: GroupModel,
                             n_samples: int = 100, seed: int = 0, scale: float = 1.0,
                             tol: float = 1e-9, dyadic: int | None = None) -> ValidationReport:
    """Sample triples and measure the residual of each datum identity.

    The residual of an identity is the max-abs coordinate difference between
    its two sides.  ``associativity`` is measured on the resulting group law.
    With ``dyadic=b`` the chart coordinates of every sample are rounded to
    multiples of ``2**-b``; for polynomial data on vector groups the
    identities are then evaluated without rounding error.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    N = fiber
    f, alpha = datum.f, datum.alpha
    e_N = N._identity()
    e_G = base._identity()
    E = ExtensionGroup(base, fiber, datum)

    def draw(model):
        p = model._random(rng, scale)
        if dyadic is None:
            return p
        return model._chart_inv(np.round(model._chart(p) * 2.0 ** dyadic) / 2.0 ** dyadic)

    def conj(g, n):
        return N._mul(N._mul(g, n), N._inv(g))

    names = ["twist_composition", "normalization", "twisted_cocycle", "associativity"]
    if datum.central:
        names.append("central_cocycle")
    per = {k: [] for k in names}
    samples = []
    for _ in range(n_samples):
        x, y, z = (draw(base) for _ in range(3))
        n = draw(N)
        samples.append((x, y, z))
        xy, yz = base._mul(x, y), base._mul(y, z)
        # alpha^x o alpha^y = conj_{f(x,y)^-1} o alpha^{yx}
        lhs = alpha(alpha(n, y), x)
        rhs = conj(N._inv(f(x, y)), alpha(n, base._mul(y, x)))
        per["twist_composition"].append(N._distance(lhs, rhs))
        per["normalization"].append(max(N._distance(f(e_G, e_G), e_N),
                                        N._distance(f(x, e_G), e_N),
                                        N._distance(f(e_G, y), e_N)))
        # e = f(xy,z)^-1 f(x,yz) f(y,z) alpha^z(f(x,y)^-1)
        val = N._mul(N._mul(N._mul(N._inv(f(xy, z)), f(x, yz)), f(y, z)),
                     alpha(N._inv(f(x, y)), z))
        per["twisted_cocycle"].append(N._distance(val, e_N))
        if datum.central:
            val = N._mul(N._mul(N._mul(f(y, z), N._inv(f(xy, z))), f(x, yz)), N._inv(f(x, y)))
            per["central_cocycle"].append(N._distance(val, e_N))
        a, b, c = ((g, draw(N)) for g in (x, y, z))
        per["associativity"].append(E._distance(E._mul(E._mul(a, b), c), E._mul(a, E._mul(b, c))))
    per = {k: np.array(v) for k, v in per.items()}
    return ValidationReport(residuals={k: float(v.max(initial=0.0)) for k, v in per.items()},
                            per_sample=per, samples=samples, tol=tol)
