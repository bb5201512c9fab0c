"""Log-concave functions ``f = exp(-phi)`` and their calculus.

A :class:`LogConcaveFn` may carry any of three descriptions:

* ``spec``: an analytic description of ``phi = -log f``;
* ``phi``: ``phi`` on a grid (sampled from ``spec`` when only that is given);
* ``support``: an analytic description of the support function ``h_f``.

Grid computations (Asplund sums, integrals, first variations) use ``phi``;
exact functionals (:mod:`asplund.riesz_lab`) use the analytic support
function when one is known.  Outputs of the Asplund sum are closures: the
back-transform from support functions always returns the upper
semi-continuous version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import specs as S
from .conjugate import auto_dual_grid, conjugate_points, legendre_transform
from .errors import ImproperFunctionError, TruncationError, ValidationError
from .grid import ConvexGridFunction, GridSpec, as_points

__all__ = [
    "LogConcaveFn",
    "CoercivityClass",
    "support_function",
    "asplund_sum",
    "dilate",
    "classify_coercivity",
    "integral",
    "direction_samples",
    "grid_integral",
    "joint_dual_grid",
]

MASS_TOLERANCE = 1e-12


def direction_samples(dim: int, m: int = 720) -> np.ndarray:
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    ang = 2 * np.pi * np.arange(m) / m
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


class LogConcaveFn:
    """``f = exp(-phi)`` described by a grid, an analytic ``phi``, or an analytic ``h_f``."""

    def __init__(self, phi=None, spec=None, support=None, grid=None, dual_grid=None, dim=None):
        if isinstance(phi, S.Spec):
            spec, phi = phi, None
        if phi is None and spec is None and support is None:
            raise ValidationError("a log-concave function needs phi, spec or support")
        self._phi = phi
        self.spec = spec
        self.grid = grid if grid is not None else (phi.grid if phi is not None else None)
        self.dual_grid = dual_grid
        dims = {d for d in (
            dim,
            phi.dim if phi is not None else None,
            spec.dim if spec is not None else None,
            support.dim if support is not None else None,
            self.grid.dim if self.grid is not None else None,
        ) if d is not None}
        if len(dims) != 1:
            raise ValidationError(f"cannot determine a unique dimension (got {sorted(dims)})")
        self.dim = dims.pop()
        if support is None and spec is not None:
            support = S.conjugate_spec(spec)
        self.support = support
        # summands of an Asplund sum: h of the sum is the sum of their h
        self.parts: tuple = ()
        self._cache: dict = {}

    # --------------------------------------------------------------- builders

    @classmethod
    def from_spec(cls, spec: S.Spec, grid: GridSpec | None = None, dim: int | None = None) -> "LogConcaveFn":
        return cls(spec=spec, grid=grid, dim=dim)

    @classmethod
    def from_grid(cls, phi: ConvexGridFunction) -> "LogConcaveFn":
        return cls(phi=phi)

    @classmethod
    def from_support(cls, h: S.Spec, dual_grid: GridSpec | None = None, grid: GridSpec | None = None,
                     dim: int | None = None) -> "LogConcaveFn":
        """The function whose support function is ``h`` (``f = exp(-h*)``)."""
        return cls(support=h, dual_grid=dual_grid, grid=grid, dim=dim)

    def __repr__(self):
        parts = []
        if self.spec is not None:
            parts.append(f"spec={self.spec!r}")
        if self.support is not None and self.spec is None:
            parts.append(f"support={self.support!r}")
        if self.grid is not None:
            parts.append(f"grid={self.grid!r}")
        return f"LogConcaveFn({', '.join(parts)})"

    # --------------------------------------------------------------- views

    @property
    def has_grid(self) -> bool:
        return self._phi is not None or (self.grid is not None and (self.spec is not None or self.support is not None))

    @property
    def phi(self) -> ConvexGridFunction:
        """``-log f`` on :attr:`grid`."""
        if self._phi is None:
            if self.grid is None:
                raise ValidationError("no grid attached; pass grid= to build a grid representation")
            if self.spec is not None:
                self._phi = S.sample_to_grid(self.spec, self.grid)
            else:
                dual = self.dual_grid
                if dual is None:
                    raise ValidationError("support-defined function needs dual_grid to tabulate phi")
                h = S.sample_to_grid(self.support, dual)
                self._phi = legendre_transform(h, self.grid)
        return self._phi

    def values(self) -> np.ndarray:
        """``f`` at the grid nodes."""
        return np.exp(-self.phi.values)

    def __call__(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        if self.spec is not None:
            return np.exp(-self.spec(x))
        return np.exp(-self.phi(x))

    def neg_log(self, x) -> np.ndarray:
        x = as_points(x, self.dim)
        if self.spec is not None:
            return self.spec(x)
        return self.phi(x)

    def support_at(self, y) -> np.ndarray:
        """``h_f`` at arbitrary points: exact analytic form, else exact over grid nodes."""
        y = as_points(y, self.dim)
        if self.support is not None:
            return self.support(y)
        if self.parts:
            return sum(p.support_at(y) for p in self.parts)
        pts, vals = self.phi.finite_points()
        out = conjugate_points(pts, vals, y.reshape(-1, self.dim))
        return out.reshape(y.shape[:-1])

    def support_body(self, theta) -> np.ndarray:
        """``h_{K_f}`` per direction (``+inf`` for unbounded support)."""
        from .recession import support_body_values

        return support_body_values(self, theta)

    def cached_support(self, dual_grid: GridSpec):
        return self._cache.get(dual_grid)

    def _store_support(self, dual_grid: GridSpec, h: ConvexGridFunction) -> None:
        self._cache[dual_grid] = h

    def to_dict(self) -> dict:
        out: dict = {}
        if self.spec is not None:
            out["neg_log"] = S.spec_to_dict(self.spec)
        elif self._phi is not None:
            out["neg_log"] = {"kind": "tabulated", "table": self._phi.to_dict()}
        if self.support is not None and self.spec is None:
            out["support"] = S.spec_to_dict(self.support)
        if self.grid is not None:
            out["grid"] = self.grid.to_dict()
        if self.dual_grid is not None:
            out["dual_grid"] = self.dual_grid.to_dict()
        out["dim"] = self.dim
        return out

    @classmethod
    def from_dict(cls, data: dict, grid: GridSpec | None = None) -> "LogConcaveFn":
        spec = S.spec_from_dict(data["neg_log"]) if "neg_log" in data else None
        support = S.spec_from_dict(data["support"]) if "support" in data else None
        phi = None
        if isinstance(spec, S.Tabulated):
            phi, spec = spec.table, None
        if grid is None and "grid" in data:
            grid = GridSpec.from_dict(data["grid"])
        dual = GridSpec.from_dict(data["dual_grid"]) if "dual_grid" in data else None
        if phi is not None:
            grid = phi.grid
        return cls(phi=phi, spec=spec, support=support if spec is None else None,
                   grid=grid, dual_grid=dual, dim=data.get("dim"))


# ------------------------------------------------------------------- support


def support_function(f: LogConcaveFn, dual_grid: GridSpec) -> ConvexGridFunction:
    """``h_f = (-log f)*`` at the nodes of ``dual_grid``; populates the cache of ``f``."""
    cached = f.cached_support(dual_grid)
    if cached is not None:
        return cached
    if f.parts:
        vals = sum(support_function(p, dual_grid).values for p in f.parts)
        h = ConvexGridFunction(dual_grid, vals)
    elif f._phi is None and f.spec is None and f.support is not None:
        h = S.sample_to_grid(f.support, dual_grid)
    else:
        h = legendre_transform(f.phi, dual_grid)
    f._store_support(dual_grid, h)
    return h


def joint_dual_grid(fs, pad: float = 0.1, max_points: int | None = None) -> GridSpec:
    """Dual grid covering the slope ranges of all ``fs``, with ``0`` as a node.

    The spacing is the finest of the per-function automatic choices, so every
    kink of every input keeps a dual node in its subdifferential.
    """
    dim = fs[0].dim
    if max_points is None:
        max_points = 20001 if dim == 1 else 513
    lo = np.full(dim, np.inf)
    hi = np.full(dim, -np.inf)
    step = np.full(dim, np.inf)
    for f in _leaves(fs):
        if f._phi is None and f.spec is None and f.dual_grid is not None:
            g = f.dual_grid
        else:
            g = auto_dual_grid(f.phi, pad=pad, max_points=max_points)
        lo, hi = np.minimum(lo, g.lower), np.maximum(hi, g.upper)
        step = np.minimum(step, g.spacing)
    out_lo, out_hi, out_n = [], [], []
    for a, b, h in zip(lo, hi, step):
        a, b = min(a, -h), max(b, h)
        h = max(h, (b - a) / (max_points - 1))
        k = math.ceil(-a / h - 1e-9)
        m = k + math.ceil(b / h - 1e-9) + 1
        out_lo.append(-k * h)
        out_hi.append((m - 1 - k) * h)
        out_n.append(max(m, 3))
    return GridSpec(out_lo, out_hi, out_n)


def _leaves(fs) -> list:
    out = []
    for f in fs:
        out.extend(_leaves(f.parts) if f.parts else [f])
    return out


def _commensurate_step(h1: float, h2: float, max_den: int = 64):
    """Largest ``d`` with ``h1/d`` and ``h2/d`` integers, if a small one exists."""
    r = Fraction(h1 / h2).limit_denominator(max_den)
    if r == 0 or abs(float(r) - h1 / h2) > 1e-9 * (h1 / h2):
        return None
    # h1 = p d, h2 = q d with r = p/q
    return h2 / r.denominator


def _sum_grid(gf: GridSpec, gg: GridSpec, max_points: int) -> GridSpec:
    lo = np.add(gf.lower, gg.lower)
    hi = np.add(gf.upper, gg.upper)
    pts = []
    for axis in range(gf.dim):
        d = _commensurate_step(gf.spacing[axis], gg.spacing[axis])
        n = None if d is None else int(round((hi[axis] - lo[axis]) / d)) + 1
        if n is None or n > max_points:
            d = min(gf.spacing[axis], gg.spacing[axis])
            n = min(int(math.ceil((hi[axis] - lo[axis]) / d)) + 1, max_points)
        pts.append(max(n, 3))
    return GridSpec(lo, hi, pts)


def _domain_mask(grid: GridSpec, parts) -> np.ndarray:
    """Nodes of ``grid`` inside the Minkowski sum of the finite-node hulls of ``parts``."""
    nodes = grid.nodes()
    tol = 1e-9 * float(np.max(grid.spacing))
    if grid.dim == 1:
        lo = sum(float(p.finite_points()[0].min()) for p in parts)
        hi = sum(float(p.finite_points()[0].max()) for p in parts)
        x = nodes[..., 0]
        return (x >= lo - tol) & (x <= hi + tol)
    pts = np.zeros((1, 2))
    for p in parts:
        q = p.finite_points()[0]
        q = _hull_vertices(q)
        pts = _hull_vertices((pts[:, None, :] + q[None, :, :]).reshape(-1, 2))
    if pts.shape[0] < 3:
        # degenerate (segment or point): distance test
        poly = S._Polytope(pts if pts.shape[0] < 2 else pts[[0, -1]])
        return poly.distance(nodes) <= tol
    normals = []
    offs = []
    m = pts.shape[0]
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        e = b - a
        nrm = np.array([e[1], -e[0]]) / np.hypot(*e)
        normals.append(nrm)
        offs.append(nrm @ a)
    normals, offs = np.array(normals), np.array(offs)
    return np.max(nodes @ normals.T - offs, axis=-1) <= tol


def _hull_vertices(q: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices; degenerate inputs return their extreme points."""
    q = np.unique(np.round(q, 12), axis=0)
    if q.shape[0] <= 2:
        return q
    try:
        hull = ConvexHull(q)
    except QhullError:
        # collinear: keep the two extremes along the principal direction
        c = q - q.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        t = c @ vt[0]
        return q[[np.argmin(t), np.argmax(t)]]
    return q[hull.vertices]


def _translate(leaves, grid: GridSpec):
    """Node values of the sum when all leaves but one are point masses, else ``None``.

    A point mass ``e^{-c} 1_{p}`` has the affine support ``<p, y> - c``, so
    adding it shifts the other summand; no conjugation is needed when the
    shifted nodes land on the lattice of that summand.
    """
    points = [p.phi for p in leaves if np.count_nonzero(p.phi.finite_mask) == 1]
    rest = [p.phi for p in leaves if np.count_nonzero(p.phi.finite_mask) != 1]
    if len(rest) > 1:
        return None
    base = rest[0] if rest else points.pop()
    shift = sum((q.finite_points()[0][0] for q in points), np.zeros(grid.dim))
    c = sum(float(q.finite_points()[1][0]) for q in points)
    x = grid.nodes() - shift
    k = (x - np.array(base.grid.lower)) / np.array(base.grid.spacing)
    if np.max(np.abs(k - np.rint(k))) > 1e-9:
        return None
    return base(x) + c


def asplund_sum(f: LogConcaveFn, g: LogConcaveFn, grid: GridSpec | None = None,
                dual_grid: GridSpec | None = None, max_points: int | None = None) -> LogConcaveFn:
    """Sup-convolution ``f * g`` computed through ``h_{f*g} = h_f + h_g``.

    The support functions are added on a common dual grid and transformed back
    once onto ``grid`` (default: the box sum of the input boxes, with a spacing
    commensurate with both inputs when one exists).  Nodes outside the
    Minkowski sum of the two domains are ``+inf``.  When both inputs carry an
    analytic support function the result also carries the analytic sum.
    """
    if f.dim != g.dim:
        raise ValidationError("Asplund sum of functions of different dimension")
    exact = None
    if f.support is not None and g.support is not None:
        exact = S.Sum((f.support, g.support))
    if not (f.has_grid and g.has_grid):
        if exact is None:
            raise ValidationError("need grids or analytic support functions for both summands")
        return LogConcaveFn.from_support(exact, dim=f.dim)
    if max_points is None:
        max_points = 8193 if f.dim == 1 else 1025
    pf, pg = f.phi, g.phi
    if grid is None:
        grid = _sum_grid(pf.grid, pg.grid, max_points)
    if dual_grid is None:
        dual_grid = joint_dual_grid([f, g])
    total = support_function(f, dual_grid).values + support_function(g, dual_grid).values
    H = ConvexGridFunction(dual_grid, total)
    leaves = _leaves([f, g])
    back = _translate(leaves, grid)
    if back is None:
        back = legendre_transform(H, grid).values
        back = np.where(_domain_mask(grid, [p.phi for p in leaves]), back, np.inf)
    try:
        phi = ConvexGridFunction(grid, back)
    except ImproperFunctionError as exc:
        raise ImproperFunctionError("Asplund sum has no finite node on the output grid") from exc
    out = LogConcaveFn(phi=phi, support=exact)
    out.parts = tuple(leaves)
    out._store_support(dual_grid, H)
    return out


def dilate(lam: float, f: LogConcaveFn) -> LogConcaveFn:
    """``(lam . f)(x) = f(x/lam)^lam``, so that ``h_{lam . f} = lam h_f``."""
    if not lam > 0:
        raise ValidationError("dilation factor must be positive")
    if lam == 1:
        return f
    spec = S.Perspective(lam, f.spec) if f.spec is not None else None
    support = S.Scaled(lam, f.support) if f.support is not None else None
    phi = None
    if f._phi is not None or (f.grid is not None and f.spec is None and f.support is not None and f.dual_grid):
        base = f.phi
        grid = GridSpec(np.multiply(base.grid.lower, lam), np.multiply(base.grid.upper, lam), base.grid.points)
        phi = ConvexGridFunction(grid, lam * base.values)
    grid = None
    if f.grid is not None:
        grid = GridSpec(np.multiply(f.grid.lower, lam), np.multiply(f.grid.upper, lam), f.grid.points)
    dual = f.dual_grid
    out = LogConcaveFn(phi=phi, spec=spec, support=support if spec is None else None,
                       grid=grid if phi is None else None, dual_grid=dual, dim=f.dim)
    if spec is not None and support is not None:
        out.support = support
    if f.parts:
        out.parts = tuple(dilate(lam, p) for p in f.parts)
    return out


# ---------------------------------------------------------------- coercivity


@dataclass(frozen=True)
class CoercivityClass:
    """Growth class of a convex function.

    ``level`` is ``"not_coercive"``, ``"coercive"`` or ``"super_coercive"``;
    ``linear_growth`` is orthogonal, with witnesses ``phi <= A |x| + B``.
    """

    level: str
    linear_growth: bool
    A: float | None = None
    B: float | None = None

    @property
    def coercive(self) -> bool:
        return self.level in ("coercive", "super_coercive")

    @property
    def super_coercive(self) -> bool:
        return self.level == "super_coercive"


def classify_coercivity(phi, dim: int | None = None) -> CoercivityClass:
    """Classify a grid function or an analytic spec.

    Grid functions are ``+inf`` off their box, hence super-coercive.  For
    specs the verdict follows the recession function: super-coercive when it
    is ``+inf`` in every direction, coercive when it is positive in every
    direction.
    """
    if isinstance(phi, ConvexGridFunction):
        return CoercivityClass("super_coercive", False)
    from .recession import recession_values

    d = dim or phi.dim or 2
    theta = direction_samples(d)
    rec = recession_values(phi, theta)
    if np.all(np.isinf(rec)):
        level = "super_coercive"
    elif np.all(rec > 1e-12):
        level = "coercive"
    else:
        level = "not_coercive"
    dom = S.domain_support(phi, theta)
    finite_everywhere = dom is not None and bool(np.all(np.isinf(dom)))
    A = S.lipschitz_bound(phi)
    if finite_everywhere and np.isfinite(A):
        B = max(float(phi(np.zeros((1, d)))[0]), 0.0)
        return CoercivityClass(level, True, float(A), B)
    return CoercivityClass(level, False)


# ------------------------------------------------------------------ integral


def _gaussian_scale(spec):
    if isinstance(spec, S.Quadratic) and spec.a > 0:
        return spec.a
    if isinstance(spec, S.Perspective):
        a = _gaussian_scale(spec.inner)
        return None if a is None else a / spec.lam
    return None


def _check_truncation(f: LogConcaveFn) -> None:
    if f.spec is None or f.grid is None:
        return
    grid = f.grid
    fmax = float(np.max(f.values()))
    h = grid.spacing
    nodes = grid.nodes()
    for axis in range(grid.dim):
        for side, idx in ((-1, 0), (1, -1)):
            face = np.take(nodes, idx, axis=axis).reshape(-1, grid.dim).copy()
            face[:, axis] += side * h[axis]
            outside = np.exp(-f.spec(face))
            if np.max(outside) >= MASS_TOLERANCE * fmax:
                raise TruncationError(
                    f"quadrature box truncates mass: f = {np.max(outside):.3g} just outside axis {axis}"
                )


def grid_integral(phi: ConvexGridFunction) -> float:
    """Trapezoidal integral of ``exp(-phi)`` over cells whose corners are all finite."""
    vals = np.exp(-phi.values)
    finite = phi.finite_mask
    if phi.dim == 1:
        ok = finite[:-1] & finite[1:]
        cell = 0.5 * (vals[:-1] + vals[1:])
    else:
        ok = finite[:-1, :-1] & finite[1:, :-1] & finite[:-1, 1:] & finite[1:, 1:]
        cell = 0.25 * (vals[:-1, :-1] + vals[1:, :-1] + vals[:-1, 1:] + vals[1:, 1:])
    return float(np.sum(np.where(ok, cell, 0.0)) * phi.grid.cell_volume)


def integral(f: LogConcaveFn, exact: bool = True) -> float:
    """``int f``.

    Centered Gaussians use ``(2 pi / a)^(n/2)`` when ``exact``; everything
    else is integrated with the trapezoidal rule on the grid, after checking
    that the box does not cut off mass.
    """
    if exact and f.spec is not None:
        a = _gaussian_scale(f.spec)
        if a is not None:
            return float((2 * np.pi / a) ** (f.dim / 2))
    _check_truncation(f)
    return grid_integral(f.phi)
