"""Discrete measures: moment measures, surface measures and their quadratures.

For ``g = exp(-psi)`` the moment measure is the push-forward of ``g dx``
under ``grad psi`` and the surface measure is the push-forward of ``g`` times
boundary length under the Gauss map of the support.  Both are represented by
finitely many weighted atoms.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import specs as S
from .errors import ValidationError
from .grid import ConvexGridFunction, GridSpec

__all__ = [
    "PointMeasure",
    "SphereMeasure",
    "MinkowskiReport",
    "moment_measure",
    "surface_measure",
    "integrate_against",
    "minkowski_check",
    "polytope_of_support",
    "measure_from_dict",
]

MASS_FLOOR = 1e-12


def _atoms(locations, weights, dim):
    x = np.asarray(locations, dtype=float)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if x.size == 0:
        if dim is None:
            raise ValidationError("empty measures need an explicit dimension")
        x = np.zeros((0, dim))
    x = x.reshape(len(w), -1) if x.ndim != 2 else x
    if x.shape[0] != w.shape[0]:
        raise ValidationError("one weight per atom is required")
    if dim is not None and x.shape[1] != dim:
        raise ValidationError(f"atoms have dimension {x.shape[1]}, expected {dim}")
    if not np.isfinite(x).all():
        raise ValidationError("atom locations must be finite")
    if not (np.isfinite(w).all() and (w > 0).all()):
        raise ValidationError("atom weights must be positive and finite")
    x, w = x.copy(), w.copy()
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


class _Measure:
    locations: np.ndarray
    weights: np.ndarray
    _kind = ""
    _coord = "x"

    @property
    def dim(self) -> int:
        return self.locations.shape[1]

    def __len__(self):
        return len(self.weights)

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def scaled(self, c: float):
        if c == 0:
            return type(self)(np.zeros((0, self.dim)), np.zeros(0), dim=self.dim)
        if not c > 0:
            raise ValidationError("measures scale by non-negative factors")
        return type(self)(self.locations, c * self.weights)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"{self._coord}{i + 1}" for i in range(self.dim)] + ["weight"])
        for x, m in zip(self.locations, self.weights):
            w.writerow([repr(float(c)) for c in x] + [repr(float(m))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str):
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        dim = len(rows[0]) - 1
        data = np.array([[float(c) for c in r] for r in rows[1:]]).reshape(-1, dim + 1)
        return cls(data[:, :dim], data[:, dim], dim=dim)

    def to_dict(self) -> dict:
        return {
            "kind": self._kind,
            "dim": self.dim,
            "locations": self.locations.tolist(),
            "weights": self.weights.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict):
        if data.get("kind", cls._kind) != cls._kind:
            raise ValidationError(f"expected a {cls._kind} measure, got {data.get('kind')!r}")
        return cls(data["locations"], data["weights"], dim=data.get("dim"))


@dataclass(frozen=True, eq=False)
class PointMeasure(_Measure):
    """Weighted atoms in ``R^n``; weights strictly positive."""

    locations: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dim_hint: int | None = field(default=None, repr=False)
    _kind = "point_measure"

    def __init__(self, locations, weights, dim=None):
        x, w = _atoms(locations, weights, dim)
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim_hint", x.shape[1])

    def __repr__(self):
        return f"PointMeasure(atoms={len(self)}, dim={self.dim}, mass={self.mass:.6g})"

    @property
    def first_moment(self) -> float:
        return float(np.sum(self.weights * np.linalg.norm(self.locations, axis=1)))

    @property
    def barycenter(self) -> np.ndarray:
        """``sum w x`` (not normalized by the mass)."""
        return self.weights @ self.locations


@dataclass(frozen=True, eq=False)
class SphereMeasure(_Measure):
    """Weighted atoms on the unit sphere; directions normalized to ``1e-9``."""

    locations: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    dim_hint: int | None = field(default=None, repr=False)
    _kind = "sphere_measure"
    _coord = "theta"

    def __init__(self, directions, weights, dim=None):
        x, w = _atoms(directions, weights, dim)
        if x.shape[0] and np.abs(np.linalg.norm(x, axis=1) - 1).max() > 1e-9:
            raise ValidationError("sphere atoms must be unit vectors")
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "dim_hint", x.shape[1])

    def __repr__(self):
        return f"SphereMeasure(atoms={len(self)}, dim={self.dim}, mass={self.mass:.6g})"

    @property
    def directions(self) -> np.ndarray:
        return self.locations


def measure_from_dict(data: dict):
    kind = data.get("kind")
    if kind == PointMeasure._kind:
        return PointMeasure.from_dict(data)
    if kind == SphereMeasure._kind:
        return SphereMeasure.from_dict(data)
    raise ValidationError(f"unknown measure kind {kind!r}")


# ------------------------------------------------------------ moment measure


def _cell_gradients(psi: ConvexGridFunction):
    """Gradient of the multilinear interpolant at cell centers and corner-mean ``g``."""
    v = psi.values
    h = psi.grid.spacing
    g = np.exp(-v)
    if psi.dim == 1:
        ok = np.isfinite(v[:-1]) & np.isfinite(v[1:])
        with np.errstate(invalid="ignore"):
            grad = ((v[1:] - v[:-1]) / h[0])[..., None]
        mean = 0.5 * (g[:-1] + g[1:])
        centers = 0.5 * (psi.grid.axes()[0][:-1] + psi.grid.axes()[0][1:])[..., None]
        return ok, grad, mean, centers
    c00, c10, c01, c11 = v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]
    ok = np.isfinite(c00) & np.isfinite(c10) & np.isfinite(c01) & np.isfinite(c11)
    with np.errstate(invalid="ignore"):
        gx = ((c10 - c00) + (c11 - c01)) / (2 * h[0])
        gy = ((c01 - c00) + (c11 - c10)) / (2 * h[1])
    mean = 0.25 * (g[:-1, :-1] + g[1:, :-1] + g[:-1, 1:] + g[1:, 1:])
    ax, ay = psi.grid.axes()
    cx, cy = np.meshgrid(0.5 * (ax[:-1] + ax[1:]), 0.5 * (ay[:-1] + ay[1:]), indexing="ij")
    return ok, np.stack([gx, gy], axis=-1), mean, np.stack([cx, cy], axis=-1)


def moment_measure(g, grid: GridSpec | None = None) -> PointMeasure:
    """Push-forward of ``g dx`` under ``grad(-log g)``, one atom per grid cell.

    Cells need all corners finite and mean ``g`` above ``1e-12 max g``; an
    atom sits at the cell-center gradient of the interpolated ``-log g`` and
    carries the trapezoidal mass of the cell, so the total mass is the
    trapezoidal integral of ``g``.
    """
    if grid is not None and g.spec is not None:
        psi = S.sample_to_grid(g.spec, grid)
    else:
        psi = g.phi
    ok, grad, mean, _ = _cell_gradients(psi)
    gmax = float(np.max(np.exp(-psi.values)))
    keep = ok & (mean > MASS_FLOOR * gmax)
    if not keep.any():
        raise ValidationError("g has no mass on the grid window")
    w = mean[keep] * psi.grid.cell_volume
    return PointMeasure(grad[keep], w)


# ----------------------------------------------------------- surface measure


def polytope_of_support(spec, dim: int | None = None):
    """``(polytope, density_spec)`` when the domain of ``spec`` is a polytope.

    Returns ``None`` for full support.  Raises :class:`ValidationError` for
    domains outside the exact path (balls, grids, intersections).
    """
    d = dim or spec.dim or 2
    probe = np.eye(d)
    probe = np.vstack([probe, -probe])
    dom = S.domain_support(spec, probe)
    if dom is not None and np.isinf(dom).all():
        return None
    if isinstance(spec, S.IndicatorPolytope):
        return spec.polytope
    if isinstance(spec, S.Sum):
        polys = [t for t in spec.terms if isinstance(t, S.IndicatorPolytope)]
        others = [t for t in spec.terms if not isinstance(t, S.IndicatorPolytope)]
        if len(polys) == 1:
            rest = [S.domain_support(t, probe) for t in others]
            if all(r is not None and np.isinf(r).all() for r in rest):
                return polys[0].polytope
    if isinstance(spec, S.Perspective):
        inner = polytope_of_support(spec.inner, d)
        if inner is not None:
            return S._Polytope(spec.lam * inner.v)
    if isinstance(spec, S.Scaled):
        return polytope_of_support(spec.inner, d)
    raise ValidationError("the support of g is not an explicit polytope")


def surface_measure(g, edge_quadrature: int = 16, order: int = 8) -> SphereMeasure:
    """One atom per facet of ``K_g``: outer normal, weight ``int_facet g``.

    Each edge is split into ``edge_quadrature`` panels integrated with
    ``order``-point Gauss-Legendre; in one dimension the weights are the
    values of ``g`` at the interval ends.  Full support gives the empty
    measure.
    """
    if g.spec is None:
        raise ValidationError("surface measures need an analytic density")
    poly = polytope_of_support(g.spec, g.dim)
    if poly is None:
        return SphereMeasure(np.zeros((0, g.dim)), np.zeros(0), dim=g.dim)
    density = g.spec
    if poly.n == 1:
        a, b = poly.v[0, 0], poly.v[-1, 0]
        if a == b:
            return SphereMeasure(np.zeros((0, 1)), np.zeros(0), dim=1)
        vals = np.exp(-density(np.array([[b], [a]])))
        dirs, w = np.array([[1.0], [-1.0]]), vals
    else:
        normals, lengths = poly.facets()
        t, wt = np.polynomial.legendre.leggauss(order)
        # panel nodes on [0, 1]
        edges = np.linspace(0.0, 1.0, edge_quadrature + 1)
        s = (0.5 * (edges[:-1, None] + edges[1:, None]) + 0.5 * np.diff(edges)[:, None] * t[None, :]).ravel()
        ws = (0.5 * np.diff(edges)[:, None] * wt[None, :]).ravel()
        v = poly.v
        w = []
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            pts = a[None, :] + s[:, None] * (b - a)[None, :]
            w.append(lengths[i] * float(np.sum(ws * np.exp(-density(pts)))))
        dirs, w = normals, np.array(w)
    keep = w > 0
    return SphereMeasure(dirs[keep], w[keep], dim=poly.n)


# ---------------------------------------------------------------- quadrature


def _evaluate_h(h, x, sphere: bool):
    from .recession import RecessionFunction

    if isinstance(h, ConvexGridFunction):
        inside = h.grid.contains(x, tol=1e-9)
        if not inside.all():
            raise ValidationError("atom outside the grid box of h")
        return h(x)
    if isinstance(h, RecessionFunction):
        return h(x) if sphere else h.extend(x)
    if isinstance(h, S.Spec):
        return h(x)
    return np.asarray(h(x), dtype=float)


def integrate_against(h, m) -> float:
    """``sum_i w_i h(x_i)`` with ``+inf`` as soon as a positive weight meets ``h = +inf``.

    ``h`` may be a grid function (multilinear interpolation), a recession
    function (angular interpolation), a spec or any callable on point arrays.
    """
    if len(m) == 0:
        return 0.0
    vals = _evaluate_h(h, m.locations, isinstance(m, SphereMeasure))
    if np.isinf(vals).any():
        return np.inf
    return float(np.sum(m.weights * vals))


# ------------------------------------------------------- Minkowski conditions


@dataclass(frozen=True)
class MinkowskiReport:
    mass_ok: bool
    centered_ok: bool
    full_dim_ok: bool
    mass: float
    barycenter: tuple
    singular_values: tuple

    def to_dict(self) -> dict:
        return {
            "mass_ok": self.mass_ok,
            "centered_ok": self.centered_ok,
            "full_dim_ok": self.full_dim_ok,
            "mass": self.mass,
            "barycenter": list(self.barycenter),
            "singular_values": list(self.singular_values),
        }

    @property
    def all_ok(self) -> bool:
        return self.mass_ok and self.centered_ok and self.full_dim_ok


def minkowski_check(mu: PointMeasure, center_tol: float = 1e-2, dim_tol: float = 1e-6) -> MinkowskiReport:
    """Finite positive mass, zero barycenter and no mass-carrying hyperplane.

    ``centered_ok`` means ``|sum w x| <= center_tol * sum w |x|``.
    ``full_dim_ok`` needs the smallest singular value of the weight-normalized
    atom matrix above ``dim_tol`` (relative to the largest) and, for every
    right singular vector ``u``, mass above ``dim_tol * mass`` off ``u^perp``.
    """
    W = mu.mass
    mass_ok = bool(0 < W < np.inf)
    dim = mu.dim
    if not len(mu):
        return MinkowskiReport(False, False, False, 0.0, tuple([0.0] * dim), tuple([0.0] * dim))
    bary = mu.barycenter
    first = mu.first_moment
    centered_ok = bool(np.linalg.norm(bary) <= center_tol * first) if first > 0 else True
    A = np.sqrt(mu.weights / W)[:, None] * mu.locations
    # singular values of A from the small Gram matrix A^T A
    evals, evecs = np.linalg.eigh(A.T @ A)
    order = np.argsort(evals)[::-1]
    s = np.sqrt(np.clip(evals[order], 0.0, None))
    vt = evecs[:, order].T
    scale = float(s[0]) if s[0] > 0 else 1.0
    full = bool(s[-1] > dim_tol * scale)
    if full:
        radius = float(np.max(np.linalg.norm(mu.locations, axis=1)))
        for u in vt:
            off = np.abs(mu.locations @ u) > dim_tol * max(radius, 1e-300)
            if mu.weights[off].sum() <= dim_tol * W:
                full = False
    return MinkowskiReport(mass_ok, centered_ok, full, W, tuple(map(float, bary / W)), tuple(map(float, s)))
