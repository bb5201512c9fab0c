"""Discrete Legendre-Fenchel transform on uniform grids.

Each one-dimensional line is handled by a single lower-hull pass over the
finite nodes followed by a sorted slope lookup; two-dimensional transforms are
iterated one-dimensional transforms along the axes.  Both return the exact
conjugate ``max_i <x_i, y> - v_i`` over finite nodes.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ImproperFunctionError, ValidationError
from .grid import ConvexGridFunction, GridSpec, same_grid

__all__ = [
    "lower_hull",
    "conjugate_line",
    "legendre_transform",
    "conjugate_points",
    "auto_dual_grid",
    "biconjugate",
    "pointwise_combine",
]


def lower_hull(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points ``(x_i, v_i)``, x increasing.

    Collinear points are dropped, so every retained vertex is a strict kink.
    """
    hull: list = []
    for i in range(len(x)):
        xi, vi = x[i], v[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            if (v[b] - v[a]) * (xi - x[a]) >= (vi - v[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def conjugate_line(x: np.ndarray, v: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``max_i (x_i * y - v_i)`` over finite ``v_i`` for sorted ``x``.

    Returns ``-inf`` everywhere when no value is finite.  Ties between two hull
    vertices go to the smaller abscissa.
    """
    finite = np.isfinite(v)
    if not finite.any():
        return np.full(np.shape(y), -np.inf)
    xs, vs = x[finite], v[finite]
    idx = lower_hull(xs, vs)
    hx, hv = xs[idx], vs[idx]
    if hx.size == 1:
        return hx[0] * y - hv[0]
    slopes = np.diff(hv) / np.diff(hx)
    j = np.searchsorted(slopes, y, side="left")
    return hx[j] * y - hv[j]


def _segment_slopes(x: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Per-column chord slopes, padded with ``-inf`` before and ``+inf`` after the finite run."""
    finite = np.isfinite(values)
    with np.errstate(invalid="ignore"):
        s = np.diff(values, axis=0) / np.diff(x)[:, None]
    started = np.cumsum(finite, axis=0)[:-1] > 0
    both = finite[:-1] & finite[1:]
    return np.where(both, s, np.where(started, np.inf, -np.inf))


def _conjugate_axis(axis_x, values, axis_y):
    # values: (n, m) -> (len(axis_y), m); conjugate along axis 0 for each column.
    # Columns whose chord slopes already increase skip the hull pass: the
    # conjugate at y is read off the first chord with slope >= y.
    out = np.full((len(axis_y), values.shape[1]), -np.inf)
    s = _segment_slopes(axis_x, values)
    with np.errstate(invalid="ignore"):
        step_ok = (s[1:] >= s[:-1]) | (np.abs(s[:-1] - s[1:]) <= 1e-12 * (1 + np.abs(s[:-1])))
    convex = step_ok.all(axis=0)
    any_finite = np.isfinite(values).any(axis=0)
    for j in np.flatnonzero(any_finite):
        if convex[j]:
            k = np.searchsorted(s[:, j], axis_y, side="left")
            out[:, j] = axis_x[k] * axis_y - values[k, j]
        else:
            out[:, j] = conjugate_line(axis_x, values[:, j], axis_y)
    return out


def legendre_transform(phi: ConvexGridFunction, dual_grid: GridSpec) -> ConvexGridFunction:
    """Conjugate ``phi*(y) = sup_x <x, y> - phi(x)`` at the nodes of ``dual_grid``.

    The primal function has bounded domain, so the result is finite at every
    dual node.
    """
    if dual_grid.dim != phi.dim:
        raise ValidationError("dual grid dimension differs from the primal grid")
    if not phi.finite_mask.any():
        raise ImproperFunctionError("cannot conjugate an improper function")
    px, dy = phi.grid.axes(), dual_grid.axes()
    if phi.dim == 1:
        vals = _conjugate_axis(px[0], phi.values[:, None], dy[0])[:, 0]
    else:
        # g(y1, x2) = max_x1 x1*y1 - v(x1, x2); then max_x2 x2*y2 + g(y1, x2)
        g = _conjugate_axis(px[0], phi.values, dy[0])
        neg = np.where(np.isfinite(g), -g, np.inf)
        vals = _conjugate_axis(px[1], neg.T, dy[1]).T
    return ConvexGridFunction(dual_grid, vals)


def conjugate_points(points: np.ndarray, values: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Brute-force ``max_i <p_i, y> - v_i``; the independent reference for tests."""
    points = np.asarray(points, dtype=float).reshape(len(values), -1)
    y = np.asarray(y, dtype=float).reshape(-1, points.shape[1])
    finite = np.isfinite(values)
    return np.max(y @ points[finite].T - values[finite][None, :], axis=1)


def _kink_gap(phi: ConvexGridFunction, axis: int) -> float:
    """Smallest slope jump at a strict hull vertex over all lines along ``axis``."""
    x = phi.grid.axes()[axis]
    lines = np.moveaxis(phi.values, axis, -1).reshape(-1, len(x))
    gap = math.inf
    for v in lines:
        finite = np.isfinite(v)
        if finite.sum() < 3:
            continue
        xs, vs = x[finite], v[finite]
        idx = lower_hull(xs, vs)
        if idx.size < 3:
            continue
        s = np.diff(vs[idx]) / np.diff(xs[idx])
        jumps = np.diff(s)
        scale = 1.0 + np.abs(s).max()
        jumps = jumps[jumps > 1e-9 * scale]
        if jumps.size:
            gap = min(gap, float(jumps.min()))
    return gap


def auto_dual_grid(
    phi: ConvexGridFunction, pad: float = 0.1, max_points: int | None = None, include_zero: bool = True
) -> GridSpec:
    """Dual grid covering the slope range of ``phi`` padded by ``pad``.

    The per-axis spacing is chosen no larger than the smallest kink gap of the
    lower hull (capped at ``max_points``) so that every subdifferential
    interval contains a dual node and biconjugation is exact.  With
    ``include_zero`` the grid is shifted so that ``0`` is a node whenever it
    lies in range.
    """
    if max_points is None:
        max_points = 20001 if phi.dim == 1 else 513
    lo, hi, pts = [], [], []
    for axis, (smin, smax) in enumerate(phi.slope_range()):
        width = smax - smin
        margin = pad * width if width > 0 else max(1.0, 0.1 * abs(smax))
        a, b = smin - margin, smax + margin
        gap = _kink_gap(phi, axis)
        n = max_points if not math.isfinite(gap) else int(math.ceil((b - a) / gap)) + 1
        n = int(min(max(n, 33), max_points))
        if include_zero and a < 0 < b:
            # enlarge the box so that 0 falls on a node
            h = (b - a) / (n - 1)
            k = math.ceil(-a / h)
            a = -k * h
            b = a + (n - 1) * h
            if b < smax + margin:
                b += h
                n += 1
        lo.append(a)
        hi.append(b)
        pts.append(n)
    return GridSpec(lo, hi, pts)


def _envelope_1d(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    idx = lower_hull(x, v)
    return np.interp(x, x[idx], v[idx])


def _envelope_2d(pts: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Lower convex hull of ``(pts, v)`` evaluated at ``pts``."""
    from scipy.spatial import ConvexHull

    center = pts.mean(axis=0)
    span = float(np.ptp(pts, axis=0).max())
    centered = pts - center
    if np.linalg.matrix_rank(centered, tol=1e-12 * span) < 2:
        # finite nodes on one line: a 1-D envelope along it
        d = centered[np.argmax(np.linalg.norm(centered, axis=1))]
        t = centered @ d
        order = np.argsort(t, kind="stable")
        out = np.empty_like(v)
        out[order] = _envelope_1d(t[order], v[order])
        return out
    lo, vspan = float(v.min()), float(np.ptp(v)) or 1.0
    z = (v - lo) / vspan
    xy = centered / span
    # a lid above the data keeps the hull full-dimensional
    lid = np.array([[0.0, 0.0, float(z.max()) + 10.0]])
    hull = ConvexHull(np.vstack([np.column_stack([xy, z]), lid]), qhull_options="Qt Qc")
    eq = hull.equations
    lower = eq[:, 2] < -1e-12
    out = np.full(len(v), np.nan)
    for simplex in hull.simplices[lower]:
        for i in simplex:
            if i < len(v):
                out[i] = v[i]

    def plane(rows, idx):
        # facet n . (x, z) + c = 0 solved for z
        n = eq[rows]
        return -(n[:, 0] * xy[idx, 0] + n[:, 1] * xy[idx, 1] + n[:, 3]) / n[:, 2]

    if hull.coplanar.size:
        cp = hull.coplanar
        keep = (cp[:, 0] < len(v)) & lower[cp[:, 1]]
        idx, rows = cp[keep, 0], cp[keep, 1]
        out[idx] = lo + vspan * plane(rows, idx)
    rest = np.flatnonzero(np.isnan(out))
    if rest.size:
        # nodes strictly above the envelope: largest lower-facet plane
        n = eq[lower]
        for i in range(0, rest.size, 4096):
            r = rest[i:i + 4096]
            zz = -(np.outer(xy[r, 0], n[:, 0]) + np.outer(xy[r, 1], n[:, 1]) + n[:, 3]) / n[:, 2]
            out[r] = lo + vspan * zz.max(axis=1)
    return np.minimum(out, v)


def biconjugate(phi: ConvexGridFunction, dual_grid: GridSpec | None = None) -> ConvexGridFunction:
    """Closed convex envelope of ``phi`` at its own nodes.

    Without ``dual_grid`` the envelope is read off the lower convex hull of
    the finite nodes, which is ``phi**`` for the interpolant exactly: every
    node lies on a hull facet, whose gradient is the dual point attaining
    the second transform.  A uniform dual grid only reaches those gradients
    approximately when ``phi`` has affine pieces, so with ``dual_grid`` given
    the two transforms are taken on it instead.  Nodes where ``phi`` is
    ``+inf`` stay ``+inf``.
    """
    fin = phi.finite_mask
    if dual_grid is not None:
        star = legendre_transform(phi, dual_grid)
        back = legendre_transform(star, phi.grid).values
    else:
        back = np.full(phi.grid.shape, np.inf)
        pts, vals = phi.finite_points()
        if phi.dim == 1:
            env = _envelope_1d(pts[:, 0], vals)
        else:
            env = _envelope_2d(pts, vals)
        back[fin] = env
    back = np.where(fin, back, np.inf)
    return ConvexGridFunction(phi.grid, back)


def pointwise_combine(op: str, *args, scale: float | None = None, slope=None, offset: float = 0.0):
    """Nodewise ``sum``, ``max``, ``scale`` or ``add_affine`` of grid functions.

    ``scale`` needs ``scale > 0`` and one argument; ``add_affine`` adds
    ``<slope, x> + offset`` to one argument.
    """
    if not args:
        raise ValidationError("pointwise_combine needs at least one argument")
    grid = args[0].grid
    for a in args[1:]:
        if not same_grid(a.grid, grid):
            raise ValidationError("grid mismatch")
    if op == "sum":
        vals = np.sum([a.values for a in args], axis=0)
    elif op == "max":
        vals = np.max([a.values for a in args], axis=0)
    elif op == "scale":
        if scale is None or not scale > 0:
            raise ValidationError("scale requires a factor > 0")
        vals = scale * args[0].values
    elif op == "add_affine":
        b = np.atleast_1d(np.asarray(slope if slope is not None else 0.0, dtype=float))
        if b.size == 1:
            b = np.repeat(b, grid.dim)
        vals = args[0].values + grid.nodes() @ b + offset
    else:
        raise ValidationError(f"unknown operation {op!r}")
    return ConvexGridFunction(grid, vals)
