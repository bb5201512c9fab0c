"""Uniform box grids and extended-real convex functions sampled on them.

A :class:`ConvexGridFunction` stores node values in ``(-inf, +inf]``.  The
value ``+inf`` is IEEE ``numpy.inf``; arithmetic on it is exact
(``x + inf == inf`` and ``lam * inf == inf`` for ``lam > 0``), and ``-inf`` or
NaN are rejected on construction.

Semantics: the grid function is the lower convex envelope of its finite
nodes, extended by ``+inf`` outside the box.  In one dimension, and for convex
node data, this is the piecewise-linear interpolant of the finite nodes.  The
conjugate of such a function is the maximum over finite nodes of
``<x, y> - v``, which is what :func:`legendre_transform` computes exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ImproperFunctionError, ValidationError

__all__ = [
    "GridSpec",
    "ConvexGridFunction",
    "check_extreal",
]


def check_extreal(values) -> np.ndarray:
    """Return ``values`` as a float array, rejecting NaN and ``-inf``."""
    arr = np.asarray(values, dtype=float)
    if np.isnan(arr).any():
        raise ValidationError("NaN is not an extended real")
    if np.isneginf(arr).any():
        raise ValidationError("-inf does not occur for proper convex functions")
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on the box ``[lower, upper]`` in dimension 1 or 2.

    ``points`` may be a single integer (used on every axis) or one integer
    per axis.
    """

    lower: tuple
    upper: tuple
    points: tuple

    def __init__(self, lower, upper, points):
        lo = tuple(float(v) for v in np.atleast_1d(lower))
        hi = tuple(float(v) for v in np.atleast_1d(upper))
        if len(lo) != len(hi):
            raise ValidationError("lower and upper must have the same length")
        if len(lo) not in (1, 2):
            raise ValidationError(f"grids are limited to dimension 1 or 2, got {len(lo)}")
        pts = np.atleast_1d(points).astype(int)
        if pts.size == 1:
            pts = np.repeat(pts, len(lo))
        if pts.size != len(lo):
            raise ValidationError("points must be an int or one int per axis")
        if (pts < 3).any():
            raise ValidationError("at least 3 points per axis are required")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValidationError(f"invalid axis bounds [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "points", tuple(int(p) for p in pts))

    @classmethod
    def box(cls, radius: float, points: int, dim: int = 1) -> "GridSpec":
        """Centered cube ``[-radius, radius]^dim``."""
        return cls([-radius] * dim, [radius] * dim, points)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> np.ndarray:
        lo, hi, n = np.array(self.lower), np.array(self.upper), np.array(self.points)
        return (hi - lo) / (n - 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list:
        return [np.linspace(a, b, n) for a, b, n in zip(self.lower, self.upper, self.points)]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = np.array(self.lower), np.array(self.upper)
        slack = tol * (1.0 + np.abs(hi - lo))
        return np.all((x >= lo - slack) & (x <= hi + slack), axis=-1)

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper), "points": list(self.points)}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(data["lower"], data["upper"], data["points"])


def _check_lattice_convex(finite: np.ndarray) -> None:
    # along every axis line the finite nodes must form one contiguous run
    for axis in range(finite.ndim):
        lines = np.moveaxis(finite, axis, -1).reshape(-1, finite.shape[axis])
        for line in lines:
            idx = np.flatnonzero(line)
            if idx.size and idx[-1] - idx[0] + 1 != idx.size:
                raise ValidationError(
                    "finite nodes are not lattice-convex (finite/+inf/finite run on an axis line)"
                )


@dataclass(frozen=True, eq=False)
class ConvexGridFunction:
    """Extended-real node values of a convex function on a :class:`GridSpec`."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = check_extreal(self.values)
        if vals.shape != self.grid.shape:
            raise ValidationError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        finite = np.isfinite(vals)
        if not finite.any():
            raise ImproperFunctionError("all nodes are +inf")
        _check_lattice_convex(finite)
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def finite_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def finite_points(self) -> tuple:
        """Coordinates and values of the finite nodes."""
        mask = self.finite_mask
        return self.grid.nodes()[mask], self.values[mask]

    def slope_range(self) -> list:
        """Per-axis ``(min, max)`` of one-sided finite-difference slopes."""
        out = []
        h = self.grid.spacing
        for axis in range(self.dim):
            with np.errstate(invalid="ignore"):  # inf - inf outside the domain
                d = np.diff(self.values, axis=axis) / h[axis]
            d = d[np.isfinite(d)]
            if d.size == 0:
                out.append((0.0, 0.0))
            else:
                out.append((float(d.min()), float(d.max())))
        return out

    def __call__(self, x) -> np.ndarray:
        """Piecewise (multi)linear interpolation on fully finite cells, node values at nodes, ``+inf`` elsewhere."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            if self.dim == 1:
                x = x[..., None]
            else:
                raise ValidationError(f"expected points of dimension {self.dim}")
        lead = x.shape[:-1]
        pts = x.reshape(-1, self.dim)
        vals = np.where(np.isfinite(self.values), self.values, np.nan)
        interp = RegularGridInterpolator(
            self.grid.axes(), vals, method="linear", bounds_error=False, fill_value=np.nan
        )
        out = interp(pts)
        # a node on the boundary of the finite region keeps its own value
        g = self.grid
        k = (pts - np.array(g.lower)) / np.array(g.spacing)
        idx = np.rint(k)
        hit = np.all(np.abs(k - idx) <= 1e-9, axis=1) & np.all((idx >= 0) & (idx < np.array(g.points)), axis=1)
        if hit.any():
            rows = tuple(idx[hit].astype(int).T)
            out[hit] = self.values[rows]
        out = np.where(np.isnan(out), np.inf, out)
        return out.reshape(lead)

    def with_values(self, values) -> "ConvexGridFunction":
        return ConvexGridFunction(self.grid, values)

    def to_csv(self) -> str:
        """CSV text with columns ``x1[,x2],value``; ``+inf`` written as ``inf``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(self.dim)] + ["value"])
        nodes = self.grid.nodes().reshape(-1, self.dim)
        for x, v in zip(nodes, self.values.reshape(-1)):
            writer.writerow([repr(float(c)) for c in x] + ["inf" if np.isinf(v) else repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, grid: GridSpec) -> "ConvexGridFunction":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        vals = np.array([float(r[-1]) for r in rows if r])
        return cls(grid, vals.reshape(grid.shape))

    def to_dict(self) -> dict:
        flat = [None if np.isinf(v) else float(v) for v in self.values.reshape(-1)]
        return {"grid": self.grid.to_dict(), "values": flat}

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexGridFunction":
        grid = GridSpec.from_dict(data["grid"])
        vals = np.array([np.inf if v is None or v == "inf" else float(v) for v in data["values"]])
        return cls(grid, vals.reshape(grid.shape))


def same_grid(a: GridSpec, b: GridSpec) -> bool:
    return a.points == b.points and np.allclose(a.lower, b.lower) and np.allclose(a.upper, b.upper)


def as_points(x: Sequence, dim: int) -> np.ndarray:
    """Coerce ``x`` to an array of points with trailing axis ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.shape[-1] != dim:
        if dim == 1:
            arr = arr[..., None]
        else:
            raise ValidationError(f"dimension mismatch: expected {dim}, got {arr.shape[-1]}")
    return arr
