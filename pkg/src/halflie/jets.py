"""
Truncated jet calculus between open subsets of coordinate spaces.

A k-jet ``(x, y, p_1, ..., p_k)`` stores the base point, the value and the
scaled symmetric derivative blocks ``p_j = d^j f(x) / j!``.  With this scaling
the blocks are exactly the homogeneous parts of the Taylor polynomial, so jet
composition is truncated polynomial composition and jet inversion is series
reversion.

Blocks are stored in canonical form (one entry per nondecreasing multi-index)
and expanded to full symmetric tensors for arithmetic.  Entries may be floats
or :class:`fractions.Fraction` objects; in the latter case every operation
except :func:`jet_norm` is exact.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import (BaseMismatch, OrderMismatch, SingularLinearPart,
                     SourceTargetMismatch, StepTooSmall)

__all__ = [
    "SymBlock", "Jet", "TangentPoint", "PolynomialMap",
    "identity_jet", "compose", "evaluate", "invert", "jet_of_map",
    "jet_norm", "jet_distance", "operator_norm", "composition_bound",
    "composition_lipschitz_bound", "evaluation_bound",
    "jet_to_record", "jet_from_record", "to_derivative_convention",
]

#: reciprocal condition number below which a linear part counts as singular
RCOND_MIN = 1e-10


@lru_cache(maxsize=None)
def _canonical_indices(n: int, j: int) -> tuple:
    return tuple(itertools.combinations_with_replacement(range(n), j))


@lru_cache(maxsize=None)
def _gather_index(n: int, j: int) -> np.ndarray:
    """Column of the canonical coefficient for every full-tensor position."""
    col = {multi: c for c, multi in enumerate(_canonical_indices(n, j))}
    return np.array([col[tuple(sorted(pos))] for pos in itertools.product(range(n), repeat=j)])


def _is_exact(a) -> bool:
    return np.asarray(a).dtype == object


def _as_array(a, exact=None):
    arr = np.asarray(a)
    if arr.dtype == object or exact:
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr.astype(object)
    return arr.astype(float)


def symmetrize(t: np.ndarray) -> np.ndarray:
    """Average a tensor of shape ``(m, n, ..., n)`` over its input slots."""
    j = t.ndim - 1
    if j <= 1:
        return t
    perms = list(itertools.permutations(range(1, j + 1)))
    acc = None
    for perm in perms:
        tp = np.transpose(t, (0,) + perm)
        acc = tp if acc is None else acc + tp
    if acc.dtype == object:
        return acc * Fraction(1, len(perms))
    return acc / len(perms)


@dataclass(frozen=True, eq=False)
class SymBlock:
    """Symmetric j-linear map R^n x ... x R^n -> R^m in canonical storage.

    ``coeffs[:, c]`` holds the full-tensor entry at the c-th nondecreasing
    multi-index of ``_canonical_indices(n, j)``.
    """

    order: int
    n: int
    m: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.order < 1 or self.n < 1 or self.m < 1:
            raise ValueError("SymBlock needs order >= 1 and positive dims")
        expected = (self.m, len(_canonical_indices(self.n, self.order)))
        if self.coeffs.shape != expected:
            raise ValueError(f"coeffs shape {self.coeffs.shape} != {expected}")

    @property
    def dims(self):
        return (self.n, self.m)

    @classmethod
    def from_full(cls, tensor, symmetric_check=False) -> "SymBlock":
        t = np.asarray(tensor)
        m, j = t.shape[0], t.ndim - 1
        n = t.shape[1]
        if symmetric_check and not np.allclose(np.asarray(symmetrize(t), float), np.asarray(t, float)):
            raise ValueError("tensor is not symmetric in its input slots")
        idx = _canonical_indices(n, j)
        coeffs = np.empty((m, len(idx)), dtype=t.dtype)
        for c, multi in enumerate(idx):
            coeffs[:, c] = t[(slice(None),) + multi]
        return cls(j, n, m, coeffs)

    def to_full(self) -> np.ndarray:
        shape = (self.m,) + (self.n,) * self.order
        return self.coeffs[:, _gather_index(self.n, self.order)].reshape(shape)

    def __call__(self, *vectors):
        t = self.to_full()
        if len(vectors) == 1 and self.order > 1:
            vectors = vectors * self.order
        for v in reversed(vectors):
            t = t @ np.asarray(v)
        return t


@dataclass(frozen=True, eq=False)
class TangentPoint:
    """Tangent vector ``X`` attached at base point ``x``."""

    base: np.ndarray
    vector: np.ndarray

    def __post_init__(self):
        if np.shape(self.base) != np.shape(self.vector):
            raise ValueError("base and vector dimensions differ")

    def as_point(self):
        return np.concatenate([self.base, self.vector])


@dataclass(frozen=True, eq=False)
class Jet:
    """k-jet ``(source, target, blocks)`` with ``blocks[j-1]`` of order j."""

    source: np.ndarray
    target: np.ndarray
    blocks: tuple

    def __post_init__(self):
        n, m = len(self.source), len(self.target)
        for j, b in enumerate(self.blocks, start=1):
            if b.order != j or b.dims != (n, m):
                raise ValueError(f"block {j} has order {b.order} and dims {b.dims}")

    @property
    def order(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return len(self.source)

    @property
    def m(self) -> int:
        return len(self.target)

    @property
    def exact(self) -> bool:
        return _is_exact(self.source)

    @classmethod
    def from_tensors(cls, source, target, tensors: Sequence) -> "Jet":
        exact = any(_is_exact(t) for t in [source, target, *tensors])
        src = _as_array(np.atleast_1d(source), exact)
        tgt = _as_array(np.atleast_1d(target), exact)
        blocks = []
        for j, t in enumerate(tensors, start=1):
            t = _as_array(t, exact)
            t = t.reshape((len(tgt),) + (len(src),) * j)
            blocks.append(SymBlock.from_full(t))
        return cls(src, tgt, tuple(blocks))

    @classmethod
    def scalar(cls, source, target, coefficients) -> "Jet":
        """1D convenience constructor: ``Jet.scalar(0, 0, [2, 0.5])``."""
        return cls.from_tensors([source], [target],
                                [np.reshape(c, (1,) * (j + 2)) for j, c in enumerate(coefficients)])

    def tensors(self) -> list:
        return [b.to_full() for b in self.blocks]

    def as_float(self) -> "Jet":
        return Jet.from_tensors(np.asarray(self.source, float), np.asarray(self.target, float),
                                [np.asarray(t, float) for t in self.tensors()])

    def __call__(self, h):
        """Taylor polynomial ``y + sum_j p_j(h^j)``."""
        h = np.asarray(h)
        out = np.array(self.target, copy=True)
        for b in self.blocks:
            out = out + b(h)
        return out

    def flat(self) -> np.ndarray:
        """All stored numbers, for componentwise comparisons."""
        parts = [np.asarray(self.source).ravel(), np.asarray(self.target).ravel()]
        parts += [b.coeffs.ravel() for b in self.blocks]
        return np.concatenate(parts)

    def __repr__(self):
        return f"Jet(order={self.order}, n={self.n}, m={self.m}, source={self.source}, target={self.target})"


def identity_jet(x, k: int) -> Jet:
    x = np.atleast_1d(np.asarray(x))
    n = len(x)
    exact = _is_exact(x)
    eye = np.eye(n, dtype=object if exact else float)
    if exact:
        eye = _as_array(np.eye(n, dtype=int), True)
    tensors = [eye] + [np.zeros((n,) + (n,) * j) for j in range(2, k + 1)]
    return Jet.from_tensors(x, x, tensors)


def _compositions(total: int, parts: int):
    """Ordered tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _zeros(shape, exact):
    z = np.zeros(shape, dtype=object if exact else float)
    if exact:
        z[...] = Fraction(0)
    return z


def _polycompose(q: list, p: list, k: int, n: int, exact: bool, jmax=None) -> list:
    """Homogeneous parts 1..k of ``q o p`` (both without constant terms).

    ``q[j-1]`` has shape ``(l, m^j)`` and ``p[i-1]`` shape ``(m, n^i)``; the sum
    runs over ordered compositions, which is the multivariate Faa di Bruno
    expansion in the scaled convention.  Only outer blocks ``j <= jmax`` enter.
    """
    l = q[0].shape[0]
    jmax = len(q) if jmax is None else jmax
    out = []
    for total in range(1, k + 1):
        acc = _zeros((l,) + (n,) * total, exact)
        for j in range(1, min(total, jmax) + 1):
            for parts in _compositions(total, j):
                t = q[j - 1]
                for i in parts:
                    t = np.tensordot(t, p[i - 1], axes=([1], [0]))
                acc = acc + t
        out.append(symmetrize(acc))
    return out


def compose(outer: Jet, inner: Jet) -> Jet:
    """Jet composition ``outer . inner`` (outer after inner)."""
    if outer.order != inner.order:
        raise OrderMismatch(f"orders {outer.order} and {inner.order} differ")
    if outer.n != inner.m or not np.array_equal(outer.source, inner.target):
        raise SourceTargetMismatch("outer.source must equal inner.target")
    k = inner.order
    if k == 0:
        return Jet(inner.source, outer.target, ())
    exact = outer.exact or inner.exact
    blocks = _polycompose(outer.tensors(), inner.tensors(), k, inner.n, exact)
    return Jet.from_tensors(inner.source, outer.target, blocks)


def evaluate(jet: Jet, xi: TangentPoint) -> Jet:
    """Jet of the tangent map ``Tf`` at ``xi``, computed from ``j^k_x f``.

    In the scaled convention the j-th block of the result is
    ``(a, A) -> (p_j(a^j), (j+1) p_{j+1}(a^j, X) + j p_j(a^(j-1), A))``.
    """
    k = jet.order
    if k == 0:
        raise OrderMismatch("cannot evaluate a 0-jet")
    base = np.asarray(xi.base)
    if base.shape != jet.source.shape or not np.array_equal(base, jet.source):
        raise BaseMismatch("xi.base must equal jet.source")
    n, m, exact = jet.n, jet.m, jet.exact
    X = _as_array(xi.vector, exact)
    p = jet.tensors()
    target = np.concatenate([jet.target, p[0] @ X])
    blocks = []
    for j in range(1, k):
        t = _zeros((2 * m,) + (2 * n,) * j, exact)
        hor = (slice(0, n),) * j
        t[(slice(0, m),) + hor] = p[j - 1]
        t[(slice(m, 2 * m),) + hor] = (j + 1) * (p[j] @ X)
        ver = (slice(0, n),) * (j - 1) + (slice(n, 2 * n),)
        t[(slice(m, 2 * m),) + ver] = t[(slice(m, 2 * m),) + ver] + j * p[j - 1]
        blocks.append(symmetrize(t))
    return Jet.from_tensors(np.concatenate([base.astype(X.dtype), X]), target, blocks)


def _inverse_matrix(a: np.ndarray) -> np.ndarray:
    if a.dtype != object:
        return np.linalg.inv(a)
    n = a.shape[0]
    aug = np.concatenate([a.copy(), _as_array(np.eye(n, dtype=int), True)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r, col] != 0), None)
        if piv is None:
            raise SingularLinearPart("exact linear part is singular")
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] = aug[col] / aug[col, col]
        for r in range(n):
            if r != col and aug[r, col] != 0:
                aug[r] = aug[r] - aug[r, col] * aug[col]
    return aug[:, n:]


def invert(jet: Jet, rcond_min: float = RCOND_MIN) -> Jet:
    """Inverse jet by the recursive series-reversion formula."""
    if jet.order == 0:
        return Jet(jet.target, jet.source, ())
    p = jet.tensors()
    p1 = p[0]
    if p1.shape[0] != p1.shape[1]:
        raise SingularLinearPart("linear part is not square")
    pf = np.asarray(p1, float)
    rc = 1.0 / np.linalg.cond(pf) if np.all(np.isfinite(pf)) else 0.0
    if not rc > rcond_min:
        raise SingularLinearPart(f"reciprocal condition number {rc:.3g} <= {rcond_min:.3g}")
    exact, n, k = jet.exact, jet.n, jet.order
    q1 = _inverse_matrix(p1)
    # p_i precomposed with q1 in every input slot
    pt = []
    for i, t in enumerate(p, start=1):
        for _ in range(i):
            t = np.tensordot(t, q1, axes=([1], [0]))
        pt.append(t)
    q = [q1]
    for order in range(2, k + 1):
        part = _polycompose(q, pt, order, n, exact, jmax=order - 1)[order - 1]
        q.append(-part)
    return Jet.from_tensors(jet.target, jet.source, q)


def to_derivative_convention(jet: Jet) -> Jet:
    """Rescale blocks from ``d^j f / j!`` to ``d^j f``."""
    return Jet.from_tensors(jet.source, jet.target,
                            [math.factorial(j) * t for j, t in enumerate(jet.tensors(), start=1)])


# ---------------------------------------------------------------------------
# norms

_SPHERE_SAMPLES = 96
TOL = 1e-12
MAX_ASCENT = 400
SHIFT = 0.3
_NORM_MEMO: dict = {}


@lru_cache(maxsize=None)
def _unit_samples(n: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=0x5EED + n))
    pts = rng.standard_normal((_SPHERE_SAMPLES, n))
    pts = np.concatenate([np.eye(n), pts])
    if n > 1:
        diag = np.ones(n) / np.sqrt(n)
        pts = np.concatenate([pts, diag[None, :]])
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def operator_norm(tensor) -> float:
    """Norm of a symmetric multilinear map given as a full tensor.

    For symmetric maps between Euclidean spaces the multilinear norm equals
    ``max_{|h|=1} |p(h, ..., h)|``.  Order 1 uses the spectral norm; order
    j >= 2 maximizes over a fixed sample of unit vectors and then runs shifted
    projected-gradient ascent from the best candidates.  Exact for n = 1.
    """
    t = np.ascontiguousarray(tensor, dtype=float)
    key = (t.shape, t.tobytes())
    hit = _NORM_MEMO.get(key)
    if hit is None:
        if len(_NORM_MEMO) >= 4096:
            _NORM_MEMO.clear()
        hit = _NORM_MEMO[key] = _operator_norm(t)
    return hit


def _operator_norm(t: np.ndarray) -> float:
    j = t.ndim - 1
    n = t.shape[1]
    if j == 1:
        return float(np.linalg.norm(t, 2))
    if not np.any(t):
        return 0.0
    if n == 1:
        return float(np.linalg.norm(t.reshape(t.shape[0])))
    flat = t.reshape(t.shape[0] * n, n ** (j - 1))

    def partial(h):
        # p(h^(j-1), .) for a batch of vectors h, shape (batch, m, n)
        kron = h
        for _ in range(j - 2):
            kron = (kron[:, :, None] * h[:, None, :]).reshape(len(h), -1)
        return (kron @ flat.T).reshape(len(h), t.shape[0], n)

    def image(h, pm):
        return np.einsum("bmn,bn->bm", pm, h)

    h = _unit_samples(n)
    vals = np.einsum("bm,bm->b", *(image(h, partial(h)),) * 2)
    best = float(np.sqrt(vals.max()))
    h = h[np.argsort(vals)[-32:]]
    shift = SHIFT * 2 * j * float(np.vdot(t, t))
    prev = -1.0
    for _ in range(MAX_ASCENT):
        pm = partial(h)
        val = image(h, pm)
        sq = np.einsum("bm,bm->b", val, val)
        cur = float(sq.max())
        if abs(cur - prev) <= TOL * cur:
            break
        prev = cur
        best = max(best, float(np.sqrt(cur)))
        h = 2 * j * np.einsum("bm,bmn->bn", val, pm) + shift * h
        h /= np.sqrt(np.einsum("bn,bn->b", h, h))[:, None]
    return max(best, float(np.sqrt(cur)))


def jet_norm(jet: Jet) -> float:
    """``|x| + |y| + sum_j |p_j|`` with Euclidean norms on points."""
    total = float(np.linalg.norm(np.asarray(jet.source, float)))
    total += float(np.linalg.norm(np.asarray(jet.target, float)))
    for t in jet.tensors():
        total += operator_norm(t)
    return total


def composition_bound(outer: Jet, inner: Jet) -> tuple[float, float]:
    """Return ``(|outer . inner|, (1 + |outer|)(1 + |inner|^k))``."""
    k = inner.order
    lhs = jet_norm(compose(outer, inner))
    rhs = (1 + jet_norm(outer)) * (1 + jet_norm(inner) ** k)
    return lhs, rhs


def jet_distance(a: Jet, b: Jet) -> float:
    """Norm of the componentwise difference of two jets of equal shape."""
    if (a.n, a.m, a.order) != (b.n, b.m, b.order):
        raise ValueError("jets differ in shape")
    total = float(np.linalg.norm(np.asarray(a.source, float) - np.asarray(b.source, float)))
    total += float(np.linalg.norm(np.asarray(a.target, float) - np.asarray(b.target, float)))
    for ta, tb in zip(a.tensors(), b.tensors()):
        total += operator_norm(np.asarray(ta, float) - np.asarray(tb, float))
    return total


def composition_lipschitz_bound(outer: Jet, inner: Jet, outer2: Jet, inner2: Jet) -> tuple[float, float]:
    """Return ``(|t2.s2 - t.s|, rhs)`` for the perturbation estimate

    ``|t2 - t|(1 + |s2|^k) + (1 + |t|)|s2 - s|(1 + k|s2|^(k-1) + k|s|^(k-1))``.
    """
    k = inner.order
    lhs = jet_distance(compose(outer2, inner2), compose(outer, inner))
    ns, ns2, nt = jet_norm(inner), jet_norm(inner2), jet_norm(outer)
    rhs = (jet_distance(outer2, outer) * (1 + ns2 ** k)
           + (1 + nt) * jet_distance(inner2, inner) * (1 + k * ns2 ** (k - 1) + k * ns ** (k - 1)))
    return lhs, rhs


def evaluation_bound(jet: Jet, xi: TangentPoint) -> tuple[float, float]:
    """Return ``(|s . xi|, |xi| + (k+1)|s| + |xi||s|)`` with both jets in the
    derivative convention ``d^j f``, where the bound holds."""
    k = jet.order
    lhs = jet_norm(to_derivative_convention(evaluate(jet, xi)))
    s = jet_norm(to_derivative_convention(jet))
    x = float(np.linalg.norm(np.asarray(xi.as_point(), float)))
    return lhs, x + (k + 1) * s + x * s


# ---------------------------------------------------------------------------
# polynomial maps and jets of black-box maps

def _multinomial(exps) -> int:
    out = math.factorial(sum(exps))
    for e in exps:
        out //= math.factorial(e)
    return out


class PolynomialMap:
    """Polynomial map R^n -> R^m stored as ``{exponent tuple: coefficient vector}``."""

    def __init__(self, n_in: int, n_out: int, terms: dict | None = None):
        self.n_in = n_in
        self.n_out = n_out
        self.terms = {}
        for exps, c in (terms or {}).items():
            c = np.asarray(c)
            if c.shape != (n_out,):
                raise ValueError("coefficient has wrong length")
            if np.any(c != 0):
                self.terms[tuple(exps)] = c

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @classmethod
    def random(cls, n_in, n_out, degree, rng, exact=False, scale=1.0):
        terms = {}
        for d in range(degree + 1):
            for multi in _canonical_indices(n_in, d) if d else [()]:
                exps = tuple(multi.count(i) for i in range(n_in))
                if exact:
                    c = np.array([Fraction(int(v), 8) for v in rng.integers(-8, 9, n_out)], dtype=object)
                else:
                    c = scale * rng.uniform(-1, 1, n_out)
                terms[exps] = c
        return cls(n_in, n_out, terms)

    @classmethod
    def constant(cls, n_in, value):
        value = np.asarray(value)
        return cls(n_in, len(value), {(0,) * n_in: value})

    @classmethod
    def coordinate(cls, n_in, i, dtype=float):
        one = Fraction(1) if dtype is object else 1.0
        return cls(n_in, 1, {tuple(int(j == i) for j in range(n_in)): np.array([one], dtype=dtype)})

    def __call__(self, x):
        x = np.asarray(x)
        out = None
        for exps, c in self.terms.items():
            mono = 1
            for xi, e in zip(x, exps):
                mono = mono * xi ** e
            out = c * mono if out is None else out + c * mono
        return np.zeros(self.n_out) if out is None else out

    def __add__(self, other):
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return PolynomialMap(self.n_in, self.n_out, terms)

    def mul_scalar_poly(self, other, max_degree=None):
        """Product of this map with a scalar-valued polynomial ``other``."""
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                if max_degree is not None and sum(e) > max_degree:
                    continue
                v = c1 * c2[0]
                terms[e] = terms[e] + v if e in terms else v
        return PolynomialMap(self.n_in, self.n_out, terms)

    def component(self, i):
        return PolynomialMap(self.n_in, 1, {e: c[i:i + 1] for e, c in self.terms.items()})

    def compose(self, inner: "PolynomialMap", max_degree=None) -> "PolynomialMap":
        """``self o inner`` by monomial expansion, optionally truncated."""
        if inner.n_out != self.n_in:
            raise ValueError("dimension mismatch in composition")
        comps = [inner.component(i) for i in range(self.n_in)]
        one_val = next(iter(inner.terms.values()))[0] * 0 + 1 if inner.terms else 1.0
        one = PolynomialMap(inner.n_in, 1, {(0,) * inner.n_in: np.array([one_val], dtype=object if isinstance(one_val, Fraction) else float)})
        powers = {}

        def power(i, e):
            if (i, e) not in powers:
                powers[(i, e)] = one if e == 0 else power(i, e - 1).mul_scalar_poly(comps[i], max_degree)
            return powers[(i, e)]

        result = PolynomialMap(inner.n_in, self.n_out, {})
        for exps, c in self.terms.items():
            mono = one
            for i, e in enumerate(exps):
                if e:
                    mono = mono.mul_scalar_poly(power(i, e), max_degree)
            vec = PolynomialMap(inner.n_in, self.n_out,
                                {ex: c * v[0] for ex, v in mono.terms.items()})
            result = result + vec
        return result

    def shift(self, x0) -> "PolynomialMap":
        """The polynomial ``h -> self(x0 + h)``."""
        x0 = np.asarray(x0)
        terms = {}
        for exps, c in self.terms.items():
            # expand prod_i (x0_i + h_i)^{e_i}
            factors = []
            for i, e in enumerate(exps):
                factors.append([(k_, math.comb(e, k_) * x0[i] ** (e - k_)) for k_ in range(e + 1)])
            for combo in itertools.product(*factors):
                ex = tuple(k_ for k_, _ in combo)
                w = 1
                for _, f in combo:
                    w = w * f
                v = c * w
                terms[ex] = terms[ex] + v if ex in terms else v
        return PolynomialMap(self.n_in, self.n_out, terms)

    def jet(self, x, k: int) -> Jet:
        """Exact k-jet at ``x`` read off the shifted coefficients."""
        x = np.asarray(x)
        exact = _is_exact(x) or any(_is_exact(c) for c in self.terms.values())
        sh = self.shift(x)
        zero = (0,) * self.n_in
        target = sh.terms.get(zero, _zeros(self.n_out, exact))
        tensors = []
        for j in range(1, k + 1):
            t = _zeros((self.n_out,) + (self.n_in,) * j, exact)
            for multi in _canonical_indices(self.n_in, j):
                exps = tuple(multi.count(i) for i in range(self.n_in))
                if exps in sh.terms:
                    val = sh.terms[exps]
                    val = val * Fraction(1, _multinomial(exps)) if exact else val / _multinomial(exps)
                    for perm in set(itertools.permutations(multi)):
                        t[(slice(None),) + perm] = val
            tensors.append(t)
        return Jet.from_tensors(x, target, tensors)


# central difference stencils (offsets, weights) for derivative orders 0..4
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}


def jet_of_map(f: Callable | PolynomialMap, x, k: int, h: float = 1e-3) -> Jet:
    """k-jet of ``f`` at ``x``.

    Polynomial maps are handled exactly.  Black boxes use tensor-product
    central differences with error O(h^2) per block; k must not exceed 4.
    """
    if isinstance(f, PolynomialMap):
        return f.jet(x, k)
    if k > 4:
        raise ValueError("finite-difference jets are limited to k <= 4")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if k and h ** k <= 1e3 * np.finfo(float).eps:
        raise StepTooSmall(f"h={h:g} is too small for order {k}")
    n = len(x)
    cache = {}

    def fx(offset):
        if offset not in cache:
            cache[offset] = np.atleast_1d(np.asarray(f(x + h * np.asarray(offset, float)), dtype=float))
        return cache[offset]

    y = fx((0,) * n)
    m = len(y)
    tensors = []
    for j in range(1, k + 1):
        t = np.zeros((m,) + (n,) * j)
        for multi in _canonical_indices(n, j):
            exps = [multi.count(i) for i in range(n)]
            acc = np.zeros(m)
            for combo in itertools.product(*(zip(*_STENCILS[e]) for e in exps)):
                offset = tuple(o for o, _ in combo)
                w = np.prod([wt for _, wt in combo])
                acc += w * fx(offset)
            val = acc / h ** j / math.factorial(j)
            for perm in set(itertools.permutations(multi)):
                t[(slice(None),) + perm] = val
        tensors.append(t)
    return Jet.from_tensors(x, y, tensors)


# ---------------------------------------------------------------------------
# text records

def _enc(a):
    a = np.asarray(a)
    if a.dtype == object:
        return np.vectorize(str, otypes=[object])(a).tolist()
    return a.tolist()


def _dec(v, exact):
    a = np.asarray(v, dtype=object if exact else float)
    if exact:
        a = np.vectorize(Fraction, otypes=[object])(a)
    return a


def jet_to_record(jet: Jet) -> str:
    """Serialize to ``{"order", "exact", "source", "target", "blocks"}`` JSON.

    Each block is ``{"order": j, "dims": [n, m], "coeffs": [[...]]}`` with one
    column per nondecreasing multi-index; exact entries are ``"p/q"`` strings.
    """
    rec = {
        "order": jet.order,
        "exact": jet.exact,
        "source": _enc(jet.source),
        "target": _enc(jet.target),
        "blocks": [{"order": b.order, "dims": [b.n, b.m], "coeffs": _enc(b.coeffs)} for b in jet.blocks],
    }
    return json.dumps(rec, sort_keys=True)


def jet_from_record(text: str) -> Jet:
    rec = json.loads(text)
    exact = rec.get("exact", False)
    blocks = []
    for b in rec["blocks"]:
        n, m = b["dims"]
        coeffs = _dec(b["coeffs"], exact).reshape(m, -1)
        blocks.append(SymBlock(b["order"], n, m, coeffs))
    jet = Jet(_dec(rec["source"], exact), _dec(rec["target"], exact), tuple(blocks))
    if jet.order != rec["order"]:
        raise ValueError("record order does not match its blocks")
    return jet
