"""Sectional curvature from the cometric with chart-constant 1-forms.

All derivatives are central finite differences with step h.  The stress
pairing in R12 is the duality pairing (covector applied to vector).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneratePlane, DomainBoundary


class ChartMetricField:
    def __init__(self, g: Callable, ginv: Callable | None = None, inside: Callable | None = None,
                 name: str = "chart-metric"):
        self.g = g
        self.ginv = ginv if ginv is not None else (lambda x: np.linalg.inv(g(x)))
        self.inside = inside if inside is not None else (lambda x: True)
        self.name = name

    @classmethod
    def from_group(cls, metric, atlas, name=None):
        return cls(lambda v: atlas.metric_matrix(metric, v),
                   inside=lambda v: atlas.inside(np.asarray(v)),
                   name=name or metric.model.variant)

    @classmethod
    def hyperbolic(cls):
        """Upper half-plane, ``g = y^-2 I``."""
        return cls(lambda x: np.eye(2) / x[1] ** 2, lambda x: np.eye(2) * x[1] ** 2,
                   inside=lambda x: x[1] > 0, name="hyperbolic")

    @classmethod
    def flat(cls, n):
        return cls(lambda x: np.eye(n), lambda x: np.eye(n), name=f"flat{n}")

    @classmethod
    def random_trig(cls, n, rng, amplitude=0.2):
        """``L(x) L(x)^T + I/2`` with ``L = I + amplitude * sin(Wx + c)`` entrywise."""
        W = rng.standard_normal((n, n, n))
        c = rng.uniform(0, 2 * np.pi, (n, n))

        def g(x):
            L = np.eye(n) + amplitude * np.sin(np.einsum("ijk,k->ij", W, x) + c)
            return L @ L.T + 0.5 * np.eye(n)

        return cls(g, name=f"trig{n}")


@dataclass(frozen=True)
class CovectorPair:
    x: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("x", "alpha", "beta"):
            arr = np.asarray(getattr(self, name), float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, arr)

    def swapped(self):
        return CovectorPair(self.x, self.beta, self.alpha)


def _check(field, x, h, reach):
    n = len(x)
    pts = [x] + [x + s * reach * h * e for e in np.eye(n) for s in (-1, 1)]
    if not all(field.inside(p) for p in pts):
        raise DomainBoundary(f"stencil of width {reach}h leaves the domain at {x}")


def _phi(field, a, b):
    return lambda z: float(a @ field.ginv(z) @ b)


def force(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3, a=None, b=None):
    """``1/2 d(g^-1(a, b))`` at the pair's point (a, b default to alpha, beta)."""
    a = pair.alpha if a is None else a
    b = pair.beta if b is None else b
    x = pair.x
    _check(field, x, h, 1)
    f = _phi(field, a, b)
    return np.array([(f(x + h * e) - f(x - h * e)) / (4 * h) for e in np.eye(len(x))])


def stress(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3, a=None, b=None):
    """Directional derivative of ``z -> g^-1(z) b`` along ``g^-1(x) a``."""
    a = pair.alpha if a is None else a
    b = pair.beta if b is None else b
    x = pair.x
    _check(field, x, h, 1)
    v = field.ginv(x) @ a
    scale = max(np.linalg.norm(v), 1e-300)
    d = v / scale
    if not (field.inside(x + h * d) and field.inside(x - h * d)):
        raise DomainBoundary("stress stencil leaves the domain")
    return scale * (field.ginv(x + h * d) @ b - field.ginv(x - h * d) @ b) / (2 * h)


def _second(f, x, u, h):
    return (f(x + h * u) - 2 * f(x) + f(x - h * u)) / h**2


def _mixed(f, x, u, v, h):
    return (f(x + h * u + h * v) - f(x + h * u - h * v) - f(x - h * u + h * v) + f(x - h * u - h * v)) / (4 * h * h)


def numerator_terms(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3) -> dict:
    x, a, b = pair.x, pair.alpha, pair.beta
    _check(field, x, h, 2)
    Gi = field.ginv(x)
    Xa, Xb = Gi @ a, Gi @ b
    # directional stencils along X_a, X_b; step scaled so the offset is h in chart norm
    sa, sb = max(np.linalg.norm(Xa), 1e-300), max(np.linalg.norm(Xb), 1e-300)
    ua, ub = Xa / sa, Xb / sb
    for p in (x + h * ua + h * ub, x - h * ua - h * ub, x + h * ua - h * ub, x - h * ua + h * ub):
        if not field.inside(p):
            raise DomainBoundary("mixed stencil leaves the domain")
    R11 = 0.5 * (sa**2 * _second(_phi(field, b, b), x, ua, h)
                 - 2 * sa * sb * _mixed(_phi(field, a, b), x, ua, ub, h)
                 + sb**2 * _second(_phi(field, a, a), x, ub, h))
    F_aa, F_bb, F_ab = (force(field, pair, h, p, q) for p, q in ((a, a), (b, b), (a, b)))
    D_aa, D_bb = stress(field, pair, h, a, a), stress(field, pair, h, b, b)
    D_ab, D_ba = stress(field, pair, h, a, b), stress(field, pair, h, b, a)
    R12 = F_aa @ D_bb + F_bb @ D_aa - F_ab @ (D_ab + D_ba)
    R2 = F_ab @ Gi @ F_ab - F_aa @ Gi @ F_bb
    diff = D_ab - D_ba
    R3 = -0.75 * diff @ field.g(x) @ diff
    return {"R11": float(R11), "R12": float(R12), "R2": float(R2), "R3": float(R3)}


def sectional_numerator(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3,
                        richardson: bool = False) -> float:
    """``g(R(a#, b#) b#, a#)`` as R11 + R12 + R2 + R3.

    With ``richardson=True`` the O(h^2) error is cancelled by combining the
    values at h and h/2.
    """
    val = float(sum(numerator_terms(field, pair, h).values()))
    if not richardson:
        return val
    half = float(sum(numerator_terms(field, pair, h / 2).values()))
    return (4 * half - val) / 3


def area_element(field: ChartMetricField, pair: CovectorPair) -> float:
    Gi = field.ginv(pair.x)
    a, b = pair.alpha, pair.beta
    return float((a @ Gi @ a) * (b @ Gi @ b) - (a @ Gi @ b) ** 2)


def sectional_curvature(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3,
                        richardson: bool = False) -> float:
    area = area_element(field, pair)
    if area <= 1e-12:
        raise DegeneratePlane(f"area element {area:.3e}")
    return sectional_numerator(field, pair, h, richardson) / area


def _christoffel(field, x, h):
    n = len(x)
    dg = np.stack([(field.g(x + h * e) - field.g(x - h * e)) / (2 * h) for e in np.eye(n)])
    # Gamma^l_ij = 1/2 g^{lm} (d_i g_mj + d_j g_mi - d_m g_ij)
    low = 0.5 * (np.einsum("imj->mij", dg) + np.einsum("jmi->mij", dg) - dg)
    return np.einsum("lm,mij->lij", field.ginv(x), low)


def riemann_fd_oracle(field: ChartMetricField, x, X, Y, h: float = 1e-3) -> float:
    """``g(R(X, Y) Y, X)`` from Christoffel symbols of g by nested central differences."""
    x, X, Y = (np.asarray(v, float) for v in (x, X, Y))
    _check(field, x, h, 2)
    n = len(x)
    Gam = _christoffel(field, x, h)
    dGam = np.stack([(_christoffel(field, x + h * e, h) - _christoffel(field, x - h * e, h)) / (2 * h)
                     for e in np.eye(n)])  # dGam[i, l, j, k] = d_i Gamma^l_jk
    R = (np.einsum("iljk->lijk", dGam) - np.einsum("jlik->lijk", dGam)
         + np.einsum("lim,mjk->lijk", Gam, Gam) - np.einsum("ljm,mik->lijk", Gam, Gam))
    RXYY = np.einsum("lijk,i,j,k->l", R, X, Y, Y)
    return float(RXYY @ field.g(x) @ X)


def oracle_for_pair(field: ChartMetricField, pair: CovectorPair, h: float = 1e-3) -> float:
    Gi = field.ginv(pair.x)
    return riemann_fd_oracle(field, pair.x, Gi @ pair.alpha, Gi @ pair.beta, h)


def write_table(path, rows):
    """rows: dicts with keys model, point, plane, numerator_formula, numerator_oracle, sectional."""
    cols = ["model", "point", "plane", "numerator_formula", "numerator_oracle", "sectional", "discrepancy"]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for r in rows:
            disc = abs(r["numerator_formula"] - r["numerator_oracle"])
            wr.writerow([r["model"], r["point"], r["plane"], f"{r['numerator_formula']:.10e}",
                         f"{r['numerator_oracle']:.10e}", f"{r['sectional']:.10e}", f"{disc:.10e}"])
