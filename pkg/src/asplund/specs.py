"""Closed families of convex functions with exact evaluation.

Every family is a small frozen dataclass; calling an instance on an array of
points of shape ``(..., n)`` returns the values, shape ``(...)``, with ``+inf``
outside the domain.  Families with fixed dimension (polytopes, affine maps,
tabulated grids) report it through ``dim``; the others work in any dimension.

Serialization uses a ``kind`` discriminator, see :func:`spec_to_dict` and
:func:`spec_from_dict`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import ImproperFunctionError, ValidationError
from .grid import ConvexGridFunction, GridSpec, as_points

__all__ = [
    "Spec",
    "Quadratic",
    "NormMultiple",
    "Affine",
    "Constant",
    "IndicatorPolytope",
    "IndicatorBall",
    "SupportOfPolytope",
    "RhoA",
    "Huber",
    "ShiftedCone",
    "Sum",
    "Max",
    "Scaled",
    "Perspective",
    "RadialPL",
    "RadialBarrier",
    "Tabulated",
    "evaluate",
    "sample_to_grid",
    "spec_to_dict",
    "spec_from_dict",
    "conjugate_spec",
    "lipschitz_bound",
    "structural_recession",
    "domain_support",
    "regular_polygon",
    "box_polygon",
]

_TOL = 1e-9


def _norm(x):
    return np.sqrt(np.sum(x * x, axis=-1))


class Spec:
    """Base class; subclasses define ``__call__`` on point arrays."""

    kind: ClassVar[str] = ""

    @property
    def dim(self):
        return None

    def __call__(self, x):  # pragma: no cover - abstract
        raise NotImplementedError

    # small algebra so that tests read naturally
    def __add__(self, other):
        return Sum((self, other))


def _combine_dims(*dims):
    fixed = {d for d in dims if d is not None}
    if len(fixed) > 1:
        raise ValidationError(f"incompatible dimensions {sorted(fixed)}")
    return fixed.pop() if fixed else None


@dataclass(frozen=True)
class Quadratic(Spec):
    """``a |x|^2 / 2``."""

    a: float = 1.0
    kind: ClassVar[str] = "quadratic"

    def __post_init__(self):
        if self.a < 0:
            raise ValidationError("Quadratic needs a >= 0")

    def __call__(self, x):
        return 0.5 * self.a * np.sum(x * x, axis=-1)


@dataclass(frozen=True)
class NormMultiple(Spec):
    """``c |x|``."""

    c: float = 1.0
    kind: ClassVar[str] = "norm"

    def __post_init__(self):
        if self.c < 0:
            raise ValidationError("NormMultiple needs c >= 0")

    def __call__(self, x):
        return self.c * _norm(x)


@dataclass(frozen=True)
class Affine(Spec):
    """``<slope, x> + offset``."""

    slope: tuple
    offset: float = 0.0
    kind: ClassVar[str] = "affine"

    def __post_init__(self):
        object.__setattr__(self, "slope", tuple(float(s) for s in np.atleast_1d(self.slope)))

    @property
    def dim(self):
        return len(self.slope)

    def __call__(self, x):
        return x @ np.array(self.slope) + self.offset


@dataclass(frozen=True)
class Constant(Spec):
    c: float = 0.0
    kind: ClassVar[str] = "constant"

    def __call__(self, x):
        return np.full(x.shape[:-1], float(self.c))


class _Polytope:
    """Vertex description of a point, segment, interval or convex polygon."""

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValidationError("vertices must be a non-empty (m, n) array")
        self.v = v
        self.n = v.shape[1]
        m = v.shape[0]
        self.diam = float(np.max(_norm(v[:, None, :] - v[None, :, :]))) if m > 1 else 0.0
        self.tol = _TOL * (1.0 + self.diam + float(np.max(np.abs(v))))
        if self.n == 1:
            if m > 2 or (m == 2 and v[0, 0] > v[1, 0]):
                raise ValidationError("1-D polytopes are given as [a] or [a, b] with a <= b")
        elif self.n == 2 and m >= 3:
            e = np.roll(v, -1, axis=0) - v
            cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if not (cross > 0).all():
                raise ValidationError("polygon vertices must be in strictly convex position, counter-clockwise")
        elif self.n > 2:
            raise ValidationError("polytopes are limited to dimension 1 or 2")

    def facets(self):
        """Outer unit normals and edge lengths (``n = 2``, ``m >= 3``) or interval ends."""
        v = self.v
        if self.n == 1:
            if v.shape[0] == 1:
                return np.zeros((0, 1)), np.zeros(0)
            return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
        if v.shape[0] < 3:
            return np.zeros((0, 2)), np.zeros(0)
        e = np.roll(v, -1, axis=0) - v
        length = _norm(e)
        normal = np.stack([e[:, 1], -e[:, 0]], axis=1) / length[:, None]
        return normal, length

    def contains(self, x):
        v = self.v
        m = v.shape[0]
        if self.n == 1:
            lo, hi = v[0, 0], v[-1, 0]
            return (x[..., 0] >= lo - self.tol) & (x[..., 0] <= hi + self.tol)
        if m == 1:
            return _norm(x - v[0]) <= self.tol
        if m == 2:
            d = v[1] - v[0]
            t = np.clip(((x - v[0]) @ d) / (d @ d), 0.0, 1.0)
            return _norm(x - (v[0] + t[..., None] * d)) <= self.tol
        normal, _ = self.facets()
        offs = np.sum(normal * v, axis=1)
        return np.max(x @ normal.T - offs, axis=-1) <= self.tol

    def distance(self, x):
        """Euclidean distance to the polytope."""
        v = self.v
        if self.n == 1:
            lo, hi = v[0, 0], v[-1, 0]
            return np.maximum(np.maximum(lo - x[..., 0], x[..., 0] - hi), 0.0)
        m = v.shape[0]
        if m == 1:
            return _norm(x - v[0])
        edges = [(v[i], v[(i + 1) % m]) for i in range(m if m > 2 else 1)]
        best = None
        for a, b in edges:
            d = b - a
            t = np.clip(((x - a) @ d) / (d @ d), 0.0, 1.0)
            dist = _norm(x - (a + t[..., None] * d))
            best = dist if best is None else np.minimum(best, dist)
        if m > 2:
            best = np.where(self.contains(x), 0.0, best)
        return best

    def support(self, y):
        return np.max(y @ self.v.T, axis=-1)


@dataclass(frozen=True)
class IndicatorPolytope(Spec):
    """Convex indicator: ``0`` on the polytope, ``+inf`` elsewhere."""

    vertices: tuple
    kind: ClassVar[str] = "indicator_polytope"

    def __post_init__(self):
        poly = _Polytope(self.vertices)
        object.__setattr__(self, "vertices", tuple(tuple(r) for r in poly.v.tolist()))
        object.__setattr__(self, "_poly", poly)

    @property
    def dim(self):
        return self._poly.n

    @property
    def polytope(self):
        return self._poly

    def __call__(self, x):
        return np.where(self._poly.contains(x), 0.0, np.inf)


@dataclass(frozen=True)
class IndicatorBall(Spec):
    """Convex indicator of the centered ball of radius ``r``."""

    r: float = 1.0
    kind: ClassVar[str] = "indicator_ball"

    def __call__(self, x):
        return np.where(_norm(x) <= self.r * (1 + _TOL) + _TOL, 0.0, np.inf)


@dataclass(frozen=True)
class SupportOfPolytope(Spec):
    """``h_K(y) = max_{v in K} <v, y>`` as a 1-homogeneous function on R^n."""

    vertices: tuple
    kind: ClassVar[str] = "support_polytope"

    def __post_init__(self):
        poly = _Polytope(self.vertices)
        object.__setattr__(self, "vertices", tuple(tuple(r) for r in poly.v.tolist()))
        object.__setattr__(self, "_poly", poly)

    @property
    def dim(self):
        return self._poly.n

    @property
    def polytope(self):
        return self._poly

    def __call__(self, x):
        return self._poly.support(x)


@dataclass(frozen=True)
class RhoA(Spec):
    """``a|x|^2/2`` for ``|x| <= a`` and ``a^2|x| - a^3/2`` beyond; C^1 at the seam."""

    a: float
    kind: ClassVar[str] = "rho_a"

    def __post_init__(self):
        if not self.a > 0:
            raise ValidationError("rho_a needs a > 0")

    def __call__(self, x):
        r = _norm(x)
        a = self.a
        return np.where(r <= a, 0.5 * a * r * r, a * a * r - 0.5 * a**3)


@dataclass(frozen=True)
class Huber(Spec):
    """Pasch-Hausdorff envelope ``inf_y inner(y) + k|x - y|``.

    Closed forms exist for the inner families handled in :meth:`__call__`;
    other inners must go through the tabulated path of
    :func:`asplund.recession.pasch_hausdorff`.
    """

    k: float
    inner: Spec
    kind: ClassVar[str] = "huber"

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError("Huber needs k > 0")
        if not huber_supported(self.inner):
            raise ValidationError(f"no closed-form Pasch-Hausdorff envelope for {type(self.inner).__name__}")

    @property
    def dim(self):
        return self.inner.dim

    def __call__(self, x):
        k, inner = self.k, self.inner
        r = _norm(x)
        if isinstance(inner, Quadratic):
            a = inner.a
            if a == 0:
                return np.zeros_like(r)
            return np.where(r <= k / a, 0.5 * a * r * r, k * r - 0.5 * k * k / a)
        if isinstance(inner, RhoA):
            return Huber(min(k, inner.a**2), Quadratic(inner.a))(x)
        if isinstance(inner, NormMultiple):
            return min(k, inner.c) * r
        if isinstance(inner, Constant):
            return np.full(r.shape, float(inner.c))
        if isinstance(inner, IndicatorPolytope):
            return k * inner.polytope.distance(x)
        if isinstance(inner, IndicatorBall):
            return k * np.maximum(r - inner.r, 0.0)
        if isinstance(inner, Huber):
            return Huber(min(k, inner.k), inner.inner)(x)
        raise ValidationError("unsupported inner family")  # pragma: no cover


def huber_supported(inner) -> bool:
    if isinstance(inner, Huber):
        return huber_supported(inner.inner)
    return isinstance(inner, (Quadratic, RhoA, NormMultiple, Constant, IndicatorPolytope, IndicatorBall))


@dataclass(frozen=True)
class ShiftedCone(Spec):
    """``max(inner - R, 0)``; with ``inner = h_K`` this is the probe ``max{h_K - R, 0}``."""

    inner: Spec
    R: float
    kind: ClassVar[str] = "shifted_cone"

    @classmethod
    def of_polygon(cls, vertices, R: float) -> "ShiftedCone":
        return cls(SupportOfPolytope(vertices), R)

    @property
    def dim(self):
        return self.inner.dim

    def __call__(self, x):
        return np.maximum(self.inner(x) - self.R, 0.0)


@dataclass(frozen=True)
class Sum(Spec):
    terms: tuple
    kind: ClassVar[str] = "sum"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValidationError("Sum needs at least one term")
        _combine_dims(*(t.dim for t in self.terms))

    @property
    def dim(self):
        return _combine_dims(*(t.dim for t in self.terms))

    def __call__(self, x):
        out = self.terms[0](x)
        for t in self.terms[1:]:
            out = out + t(x)
        return out


@dataclass(frozen=True)
class Max(Spec):
    terms: tuple
    kind: ClassVar[str] = "max"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValidationError("Max needs at least one term")
        _combine_dims(*(t.dim for t in self.terms))

    @property
    def dim(self):
        return _combine_dims(*(t.dim for t in self.terms))

    def __call__(self, x):
        out = self.terms[0](x)
        for t in self.terms[1:]:
            out = np.maximum(out, t(x))
        return out


@dataclass(frozen=True)
class Scaled(Spec):
    """``factor * inner``, ``factor > 0``."""

    factor: float
    inner: Spec
    kind: ClassVar[str] = "scaled"

    def __post_init__(self):
        if not self.factor > 0:
            raise ValidationError("Scaled needs factor > 0")

    @property
    def dim(self):
        return self.inner.dim

    def __call__(self, x):
        return self.factor * self.inner(x)


@dataclass(frozen=True)
class Perspective(Spec):
    """``lam * inner(x / lam)``: minus the log of the dilation ``lam . f``."""

    lam: float
    inner: Spec
    kind: ClassVar[str] = "perspective"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError("Perspective needs lam > 0")

    @property
    def dim(self):
        return self.inner.dim

    def __call__(self, x):
        return self.lam * self.inner(x / self.lam)


@dataclass(frozen=True)
class RadialPL(Spec):
    """``rho(|x|)`` with ``rho`` piecewise linear through ``(knots, values)``.

    Beyond the last knot ``rho`` continues with its last slope.  Convexity of
    ``rho`` (increasing slopes, non-negative first slope) is checked.
    """

    knots: tuple
    values: tuple
    kind: ClassVar[str] = "radial_pl"

    def __post_init__(self):
        r = np.asarray(self.knots, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise ValidationError("RadialPL needs matching knot/value arrays of length >= 2")
        if r[0] != 0 or (np.diff(r) <= 0).any():
            raise ValidationError("knots must start at 0 and increase")
        s = np.diff(v) / np.diff(r)
        if s[0] < -_TOL or (np.diff(s) < -_TOL * (1 + np.abs(s[1:]))).any():
            raise ValidationError("profile must be convex and non-decreasing")
        object.__setattr__(self, "knots", tuple(r.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))

    @property
    def last_slope(self) -> float:
        r, v = self.knots, self.values
        return (v[-1] - v[-2]) / (r[-1] - r[-2])

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        r, v = np.asarray(self.knots), np.asarray(self.values)
        inside = np.interp(t, r, v)
        return np.where(t > r[-1], v[-1] + self.last_slope * (t - r[-1]), inside)

    def __call__(self, x):
        return self.profile(_norm(x))


@dataclass(frozen=True)
class RadialBarrier(Spec):
    """``strength * (1/(R - |x|) - 1/R)`` inside the ball of radius ``R``, ``+inf`` outside.

    ``exp(-.)`` of it vanishes continuously at the boundary sphere.
    """

    radius: float = 1.0
    strength: float = 1.0
    kind: ClassVar[str] = "radial_barrier"

    def __call__(self, x):
        r = _norm(x)
        gap = self.radius - r
        with np.errstate(divide="ignore"):
            val = self.strength * (1.0 / np.where(gap > 0, gap, 1.0) - 1.0 / self.radius)
        return np.where(gap > 0, val, np.inf)


@dataclass(frozen=True, eq=False)
class Tabulated(Spec):
    """A grid function viewed as a spec (piecewise-linear, ``+inf`` off the box)."""

    table: ConvexGridFunction
    kind: ClassVar[str] = "tabulated"

    @property
    def dim(self):
        return self.table.dim

    def __call__(self, x):
        return self.table(x)


# ---------------------------------------------------------------- evaluation


def evaluate(spec: Spec, x):
    """Exact value(s) of ``spec`` at ``x``.

    A single point returns a float; an array of points ``(..., n)`` returns an
    array.  Raises :class:`ValidationError` on a dimension mismatch.
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    d = spec.dim
    if single:
        arr = np.atleast_1d(arr)[None, :]
    if d is not None and arr.shape[-1] != d:
        raise ValidationError(f"dimension mismatch: spec has dimension {d}, point has {arr.shape[-1]}")
    out = spec(arr)
    return float(out[0]) if single else out


def sample_to_grid(spec: Spec, grid: GridSpec) -> ConvexGridFunction:
    """Node-exact sampling; raises :class:`ImproperFunctionError` if every node is ``+inf``."""
    if spec.dim is not None and spec.dim != grid.dim:
        raise ValidationError(f"spec dimension {spec.dim} differs from grid dimension {grid.dim}")
    vals = spec(grid.nodes())
    if not np.isfinite(vals).any():
        raise ImproperFunctionError("sampled function is +inf at every node")
    return ConvexGridFunction(grid, vals)


# ---------------------------------------------------------------- structure


def conjugate_spec(spec: Spec):
    """Closed-form Legendre conjugate, or ``None`` when the family has none here."""
    if isinstance(spec, Quadratic):
        return Quadratic(1.0 / spec.a) if spec.a > 0 else IndicatorBall(0.0)
    if isinstance(spec, NormMultiple):
        return IndicatorBall(spec.c)
    if isinstance(spec, IndicatorBall):
        return NormMultiple(spec.r)
    if isinstance(spec, IndicatorPolytope):
        return SupportOfPolytope(spec.vertices)
    if isinstance(spec, SupportOfPolytope):
        return IndicatorPolytope(spec.vertices)
    if isinstance(spec, RhoA):
        return Sum((Quadratic(1.0 / spec.a), IndicatorBall(spec.a**2)))
    if isinstance(spec, Huber) and isinstance(spec.inner, Quadratic) and spec.inner.a > 0:
        return Sum((Quadratic(1.0 / spec.inner.a), IndicatorBall(spec.k)))
    if isinstance(spec, Perspective):
        inner = conjugate_spec(spec.inner)
        return None if inner is None else Scaled(spec.lam, inner)
    if isinstance(spec, Scaled):
        inner = conjugate_spec(spec.inner)
        return None if inner is None else Perspective(spec.factor, inner)
    if isinstance(spec, Sum):
        consts = [t for t in spec.terms if isinstance(t, Constant)]
        rest = [t for t in spec.terms if not isinstance(t, Constant)]
        if len(rest) == 1:
            inner = conjugate_spec(rest[0])
            if inner is None:
                return None
            c = sum(t.c for t in consts)
            return inner if c == 0 else Sum((inner, Constant(-c)))
    return None


def lipschitz_bound(spec: Spec) -> float:
    """Global Lipschitz constant (``inf`` for families without linear growth)."""
    if isinstance(spec, Quadratic):
        return 0.0 if spec.a == 0 else np.inf
    if isinstance(spec, NormMultiple):
        return spec.c
    if isinstance(spec, Affine):
        return float(np.linalg.norm(spec.slope))
    if isinstance(spec, Constant):
        return 0.0
    if isinstance(spec, SupportOfPolytope):
        return float(np.max(_norm(spec.polytope.v)))
    if isinstance(spec, RhoA):
        return spec.a**2
    if isinstance(spec, Huber):
        return min(spec.k, lipschitz_bound(spec.inner))
    if isinstance(spec, ShiftedCone):
        return lipschitz_bound(spec.inner)
    if isinstance(spec, Sum):
        return float(sum(lipschitz_bound(t) for t in spec.terms))
    if isinstance(spec, Max):
        return float(max(lipschitz_bound(t) for t in spec.terms))
    if isinstance(spec, Scaled):
        return spec.factor * lipschitz_bound(spec.inner)
    if isinstance(spec, Perspective):
        return lipschitz_bound(spec.inner)
    if isinstance(spec, RadialPL):
        return max(spec.last_slope, 0.0)
    return np.inf


def structural_recession(spec: Spec, theta: np.ndarray):
    """Exact recession values ``lim phi(p + lam theta)/lam`` per direction, or ``None``."""
    theta = np.asarray(theta, dtype=float)
    shape = theta.shape[:-1]
    if isinstance(spec, Quadratic):
        return np.full(shape, np.inf if spec.a > 0 else 0.0)
    if isinstance(spec, NormMultiple):
        return np.full(shape, float(spec.c))
    if isinstance(spec, Affine):
        return theta @ np.array(spec.slope)
    if isinstance(spec, Constant):
        return np.zeros(shape)
    if isinstance(spec, (IndicatorPolytope, IndicatorBall, RadialBarrier, Tabulated)):
        if isinstance(spec, IndicatorPolytope) and spec.polytope.v.shape[0] == 0:
            return None  # pragma: no cover
        return np.full(shape, np.inf)
    if isinstance(spec, SupportOfPolytope):
        return spec(theta)
    if isinstance(spec, RhoA):
        return np.full(shape, spec.a**2)
    if isinstance(spec, Huber):
        inner = structural_recession(spec.inner, theta)
        if inner is None:
            return None
        # support function of dom(inner*) intersected with the k-ball; all inner
        # families accepted by Huber are radial, so this is a pointwise min
        return np.minimum(inner, spec.k)
    if isinstance(spec, ShiftedCone):
        inner = structural_recession(spec.inner, theta)
        return None if inner is None else np.maximum(inner, 0.0)
    if isinstance(spec, (Sum, Max)):
        parts = [structural_recession(t, theta) for t in spec.terms]
        if any(p is None for p in parts):
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out + p if isinstance(spec, Sum) else np.maximum(out, p)
        return out
    if isinstance(spec, Scaled):
        inner = structural_recession(spec.inner, theta)
        return None if inner is None else spec.factor * inner
    if isinstance(spec, Perspective):
        return structural_recession(spec.inner, theta)
    if isinstance(spec, RadialPL):
        return np.full(shape, spec.last_slope)
    return None


def domain_support(spec: Spec, theta: np.ndarray):
    """Support function of ``closure(dom spec)`` per direction, or ``None``.

    ``+inf`` in every direction when the function is finite everywhere.
    """
    theta = np.asarray(theta, dtype=float)
    shape = theta.shape[:-1]
    if isinstance(spec, IndicatorPolytope):
        return spec.polytope.support(theta)
    if isinstance(spec, IndicatorBall):
        return np.full(shape, float(spec.r))
    if isinstance(spec, RadialBarrier):
        return np.full(shape, float(spec.radius))
    if isinstance(spec, Tabulated):
        pts, _ = spec.table.finite_points()
        return np.max(theta @ pts.T, axis=-1)
    if isinstance(spec, (Sum, Max)):
        bounded = []
        for t in spec.terms:
            d = domain_support(t, theta)
            if d is None:
                return None
            if np.isfinite(d).any():
                bounded.append(d)
        if not bounded:
            return np.full(shape, np.inf)
        if len(bounded) == 1:
            return bounded[0]
        return None
    if isinstance(spec, (Scaled, ShiftedCone)):
        return domain_support(spec.inner, theta)
    if isinstance(spec, Perspective):
        d = domain_support(spec.inner, theta)
        return None if d is None else spec.lam * d
    if isinstance(spec, (Quadratic, NormMultiple, Affine, Constant, SupportOfPolytope, RhoA, Huber, RadialPL)):
        return np.full(shape, np.inf)
    return None


# ---------------------------------------------------------------- polygons


def regular_polygon(m: int, inradius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> tuple:
    """Counter-clockwise regular ``m``-gon whose outer normals sit at angles ``phase + 2 pi j/m``."""
    j = np.arange(m)
    circum = inradius / np.cos(np.pi / m)
    ang = phase + 2 * np.pi * j / m - np.pi / m
    v = np.stack([np.cos(ang), np.sin(ang)], axis=1) * circum + np.asarray(center, dtype=float)
    return tuple(map(tuple, v.tolist()))


def box_polygon(lo=(0.0, 0.0), hi=(1.0, 1.0)) -> tuple:
    (a, b), (c, d) = lo, hi
    return ((a, b), (c, b), (c, d), (a, d))


# ---------------------------------------------------------------- serialization

_KINDS = {
    cls.kind: cls
    for cls in (
        Quadratic,
        NormMultiple,
        Affine,
        Constant,
        IndicatorPolytope,
        IndicatorBall,
        SupportOfPolytope,
        RhoA,
        Huber,
        ShiftedCone,
        Sum,
        Max,
        Scaled,
        Perspective,
        RadialPL,
        RadialBarrier,
        Tabulated,
    )
}


def spec_to_dict(spec: Spec) -> dict:
    """JSON-ready dict with a ``kind`` discriminator."""
    k = spec.kind
    if isinstance(spec, (Sum, Max)):
        return {"kind": k, "terms": [spec_to_dict(t) for t in spec.terms]}
    if isinstance(spec, (Huber,)):
        return {"kind": k, "k": spec.k, "inner": spec_to_dict(spec.inner)}
    if isinstance(spec, ShiftedCone):
        return {"kind": k, "R": spec.R, "inner": spec_to_dict(spec.inner)}
    if isinstance(spec, Scaled):
        return {"kind": k, "factor": spec.factor, "inner": spec_to_dict(spec.inner)}
    if isinstance(spec, Perspective):
        return {"kind": k, "lam": spec.lam, "inner": spec_to_dict(spec.inner)}
    if isinstance(spec, Tabulated):
        return {"kind": k, "table": spec.table.to_dict()}
    if isinstance(spec, (IndicatorPolytope, SupportOfPolytope)):
        return {"kind": k, "vertices": [list(v) for v in spec.vertices]}
    if isinstance(spec, Affine):
        return {"kind": k, "slope": list(spec.slope), "offset": spec.offset}
    if isinstance(spec, RadialPL):
        return {"kind": k, "knots": list(spec.knots), "values": list(spec.values)}
    fields = {f: getattr(spec, f) for f in spec.__dataclass_fields__}
    return {"kind": k, **fields}


def spec_from_dict(data: dict) -> Spec:
    try:
        kind = data["kind"]
        cls = _KINDS[kind]
    except KeyError as exc:
        raise ValidationError(f"unknown or missing spec kind in {data!r}") from exc
    params = {key: val for key, val in data.items() if key != "kind"}
    if "terms" in params:
        params["terms"] = tuple(spec_from_dict(t) for t in params["terms"])
    if "inner" in params:
        params["inner"] = spec_from_dict(params["inner"])
    if "table" in params:
        params["table"] = ConvexGridFunction.from_dict(params["table"])
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {kind}: {exc}") from exc


def check_dimension(spec: Spec, dim: int) -> None:
    if spec.dim is not None and spec.dim != dim:
        raise ValidationError(f"spec dimension {spec.dim} differs from {dim}")


def points_for(spec: Spec, x, dim: int | None = None) -> np.ndarray:
    d = dim if dim is not None else spec.dim
    if d is None:
        raise ValidationError("dimension must be given for dimension-free specs")
    return as_points(x, d)
