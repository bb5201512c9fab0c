"""Growth at infinity: recession functions, support bodies and growth constructions.

The recession function of a convex ``phi`` is the monotone limit

    rec(theta) = lim_{lam -> inf} (phi(p + lam theta) - phi(p)) / lam,

independent of the finite base point ``p``.  Analytic families are handled
structurally; anything else goes through dyadic ``lam`` with convergence
detection.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import specs as S
from .conjugate import legendre_transform
from .errors import ValidationError
from .grid import ConvexGridFunction, GridSpec

__all__ = [
    "DirectionGrid",
    "RecessionFunction",
    "recession_function",
    "recession_values",
    "numeric_recession",
    "support_body_function",
    "support_body_values",
    "pasch_hausdorff",
    "rho_a",
    "dominating_growth",
    "divergence_witness",
    "WitnessReport",
]

LAMBDAS = 2.0 ** np.arange(21)
CONVERGED = 1e-9
INFINITE = 1e12


@dataclass(frozen=True)
class DirectionGrid:
    """Unit directions: ``{-1, +1}`` in one dimension, ``m`` equally spaced angles in two."""

    dim: int = 2
    m: int = 64

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValidationError("direction grids exist for dimension 1 or 2")
        if self.dim == 2 and self.m < 3:
            raise ValidationError("need at least 3 directions")

    @property
    def angles(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([np.pi, 0.0])
        return 2 * np.pi * np.arange(self.m) / self.m

    @property
    def vectors(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[-1.0], [1.0]])
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    def __len__(self):
        return 2 if self.dim == 1 else self.m


@dataclass(frozen=True, eq=False)
class RecessionFunction:
    """Values of a 1-homogeneous function on a :class:`DirectionGrid`."""

    directions: DirectionGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.directions),):
            raise ValidationError("one value per direction is required")
        if np.isnan(vals).any():
            raise ValidationError("NaN recession value")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, theta) -> np.ndarray:
        """Angular-linear interpolation at unit directions (``+inf`` if a neighbor is)."""
        theta = np.asarray(theta, dtype=float)
        if self.directions.dim == 1:
            t = theta.reshape(theta.shape[:-1] if theta.shape[-1:] == (1,) else theta.shape)
            return np.where(t < 0, self.values[0], self.values[1])
        ang = np.mod(np.arctan2(theta[..., 1], theta[..., 0]), 2 * np.pi)
        m = self.directions.m
        pos = ang / (2 * np.pi / m)
        i = np.floor(pos).astype(int) % m
        j = (i + 1) % m
        w = pos - np.floor(pos)
        lo, hi = self.values[i], self.values[j]
        with np.errstate(invalid="ignore"):
            out = (1 - w) * lo + w * hi
        # exact hits must not pick up inf * 0 from the other neighbor
        out = np.where(w < 1e-12, lo, np.where(w > 1 - 1e-12, hi, out))
        return np.where(np.isinf(lo) | np.isinf(hi), np.where(w < 1e-12, lo, np.where(w > 1 - 1e-12, hi, np.inf)), out)

    def extend(self, x) -> np.ndarray:
        """1-homogeneous extension ``|x| rec(x/|x|)`` (0 at the origin)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        safe = np.where(r[..., None] > 0, x / np.where(r > 0, r, 1.0)[..., None], 0.0)
        vals = self(safe if self.directions.dim == 2 else np.sign(x))
        with np.errstate(invalid="ignore"):
            return np.where(r > 0, r * vals, 0.0)

    def is_sublinear(self, tol: float = 1e-9) -> bool:
        """Midpoint test on adjacent direction pairs of the homogeneous extension."""
        if self.directions.dim == 1:
            return bool(self.values[0] + self.values[1] >= -tol)
        v = self.directions.vectors
        vals = self.values
        ok = True
        for i in range(len(vals)):
            j = (i + 1) % len(vals)
            mid = 0.5 * (v[i] + v[j])
            lhs = np.linalg.norm(mid) * self(mid / np.linalg.norm(mid))
            rhs = 0.5 * (vals[i] + vals[j])
            if np.isfinite(rhs) and lhs > rhs + tol * (1 + abs(rhs)):
                ok = False
        return ok

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.directions.dim == 1:
            w.writerow(["direction", "value"])
            keys = [-1.0, 1.0]
        else:
            w.writerow(["angle", "value"])
            keys = self.directions.angles
        for k, v in zip(keys, self.values):
            w.writerow([repr(float(k)), "inf" if np.isinf(v) else repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RecessionFunction":
        rows = [r for r in csv.reader(io.StringIO(text))][1:]
        rows = [r for r in rows if r]
        vals = np.array([float(r[1]) for r in rows])
        if len(rows) == 2 and float(rows[0][0]) == -1.0:
            return cls(DirectionGrid(1), vals)
        return cls(DirectionGrid(2, len(rows)), vals)

    def to_dict(self) -> dict:
        return {
            "dim": self.directions.dim,
            "m": len(self.directions),
            "values": [None if np.isinf(v) else float(v) for v in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RecessionFunction":
        vals = [np.inf if v is None else v for v in data["values"]]
        return cls(DirectionGrid(data["dim"], data.get("m", 64)), vals)


# ------------------------------------------------------------------ recession


def _find_base_point(phi, dim: int, rng=None) -> np.ndarray:
    rng = np.random.default_rng(0) if rng is None else rng
    cand = np.vstack([np.zeros((1, dim)), rng.normal(scale=0.5, size=(256, dim))])
    vals = phi(cand)
    ok = np.flatnonzero(np.isfinite(vals))
    if ok.size == 0:
        raise ValidationError("no finite base point found by sampling")
    return cand[ok[0]]


def numeric_recession(phi, theta, base_point=None, lambdas=LAMBDAS) -> np.ndarray:
    """Recession values from dyadic difference quotients.

    Converged when successive quotients agree to ``1e-9`` relative; ``+inf``
    when a quotient exceeds ``1e12``, the ray leaves the domain, or the
    increments stop shrinking (ratio of successive increments above 0.9 over
    the last four steps, which rules out any ``1/lam`` convergence).
    Otherwise the last two quotients are Richardson-extrapolated assuming a
    ``1/lam`` error.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    dim = theta.shape[1]
    p = _find_base_point(phi, dim) if base_point is None else np.asarray(base_point, dtype=float)
    p0 = float(phi(p[None, :])[0])
    if not np.isfinite(p0):
        raise ValidationError("base point must be in the domain")
    pts = p[None, None, :] + lambdas[None, :, None] * theta[:, None, :]
    vals = phi(pts)
    out = np.empty(len(theta))
    for i, row in enumerate(vals):
        if np.isinf(row).any():
            out[i] = np.inf
            continue
        q = (row - p0) / lambdas
        if (np.abs(q) > INFINITE).any():
            out[i] = np.inf
            continue
        d = np.diff(q)
        if np.abs(d[-1]) <= CONVERGED * max(1.0, abs(q[-1])):
            out[i] = q[-1]
            continue
        tail = d[-5:]
        ratios = tail[1:] / np.where(tail[:-1] != 0, tail[:-1], np.nan)
        if np.all(tail > 0) and np.all(ratios > 0.9):
            out[i] = np.inf
            continue
        out[i] = 2 * q[-1] - q[-2]
    return out


def recession_values(phi, theta, method: str = "auto", base_point=None) -> np.ndarray:
    """Recession values of a spec or grid function at unit directions ``theta``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if isinstance(phi, ConvexGridFunction):
        # +inf outside a bounded box
        return np.full(len(theta), np.inf)
    if method == "auto":
        exact = S.structural_recession(phi, theta)
        if exact is not None:
            return np.asarray(exact, dtype=float)
    elif method != "numeric":
        raise ValidationError(f"unknown method {method!r}")
    return numeric_recession(phi, theta, base_point=base_point)


def recession_function(phi, dirs: DirectionGrid | None = None, method: str = "auto",
                       base_point=None) -> RecessionFunction:
    """:class:`RecessionFunction` of ``phi`` on ``dirs`` (structural when possible)."""
    if dirs is None:
        d = getattr(phi, "dim", None) or 2
        dirs = DirectionGrid(d)
    return RecessionFunction(dirs, recession_values(phi, dirs.vectors, method, base_point))


def support_body_values(f, theta) -> np.ndarray:
    """``h_{K_f}`` at directions ``theta``.

    Uses the domain of ``-log f`` when it is known structurally, otherwise the
    recession function of the analytic support function, otherwise the
    finite nodes of the grid.
    """
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if f.spec is not None:
        dom = S.domain_support(f.spec, theta)
        if dom is not None:
            return np.asarray(dom, dtype=float)
    if f.support is not None:
        return recession_values(f.support, theta)
    pts, _ = f.phi.finite_points()
    return np.max(theta @ pts.T, axis=1)


def support_body_function(f, dirs: DirectionGrid | None = None) -> RecessionFunction:
    """``h_{K_f}`` on ``dirs``; equals the recession function of ``h_f``."""
    dirs = dirs or DirectionGrid(f.dim)
    return RecessionFunction(dirs, support_body_values(f, dirs.vectors))


# ------------------------------------------------------------- constructions


def pasch_hausdorff(phi, k: float, grid: GridSpec | None = None, dual_grid: GridSpec | None = None):
    """Envelope ``phi_k(x) = inf_y phi(y) + k |x - y|``.

    Closed forms cover quadratics, norms, constants, ``rho_a`` and indicators.
    Other inputs need ``grid`` and ``dual_grid``: the envelope is then
    ``(phi* + indicator of kB)*`` tabulated on ``grid``.
    """
    if not k > 0:
        raise ValidationError("k must be positive")
    if isinstance(phi, S.Spec) and S.huber_supported(phi):
        return S.Huber(k, phi)
    if grid is None or dual_grid is None:
        raise ValidationError("the tabulated envelope needs grid and dual_grid")
    base = phi if isinstance(phi, ConvexGridFunction) else S.sample_to_grid(phi, grid)
    star = legendre_transform(base, dual_grid)
    y = dual_grid.nodes()
    capped = np.where(np.linalg.norm(y, axis=-1) <= k * (1 + 1e-12), star.values, np.inf)
    env = legendre_transform(ConvexGridFunction(dual_grid, capped), grid)
    return S.Tabulated(env)


def rho_a(a: float) -> S.RhoA:
    """``a|x|^2/2`` on ``|x| <= a``, ``a^2|x| - a^3/2`` beyond."""
    return S.RhoA(a)


def _convex_chain(targets) -> np.ndarray:
    # b_0 = max(1, t_0); b_{k+1} = max(2 b_k, t_{k+1}) + 1: convex, increasing, b_k >= t_k
    b = [max(1.0, float(targets[0]))]
    for t in targets[1:]:
        b.append(max(2 * b[-1], float(t)) + 1)
    return np.array(b)


def dominating_growth(phi, dim: int = 2, shells: int = 16, m: int = 720) -> S.RadialPL:
    """Radial convex ``psi >= 0`` with ``psi/phi >= k`` on the shell ``k <= |x| <= k + 1``.

    ``a_k = k max_{|x| <= k+1} phi`` (the maximum of a convex function over a
    ball sits on its boundary sphere, sampled with ``m`` directions) and the
    knots ``b_k`` follow the convex recursion of :func:`_convex_chain`.  The
    bound holds for the shells ``k < shells``.
    """
    from .logconcave import direction_samples

    theta = direction_samples(dim, m)
    probe = np.vstack([theta * r for r in np.linspace(0.5, shells + 1, 4 * (shells + 1))])
    if np.isinf(phi(probe)).any() or np.isinf(phi(np.zeros((1, dim)))).any():
        raise ValidationError("dominating_growth needs an everywhere finite function")
    a = [0.0]
    for k in range(1, shells + 1):
        a.append(k * float(np.max(phi(theta * (k + 1)))))
    b = _convex_chain(a)
    return S.RadialPL(tuple(range(shells + 1)), tuple(b.tolist()))


@dataclass(frozen=True)
class WitnessReport:
    shell_masses: tuple
    shell_values: tuple
    occupied: tuple
    partial_sum: float

    def to_dict(self) -> dict:
        return {
            "shell_masses": list(self.shell_masses),
            "shell_values": list(self.shell_values),
            "occupied": list(self.occupied),
            "partial_sum": self.partial_sum,
        }


def divergence_witness(mu, radius_cap: float):
    """Radial convex ``phi`` with ``int phi dmu`` at least the number of occupied shells.

    Shell ``k`` is ``k <= |x| < k + 1``; the profile satisfies
    ``rho(k) >= 1/mu(shell k)`` on occupied shells, so each contributes at
    least 1 to the partial integral within ``radius_cap``.
    """
    x = np.asarray(mu.locations, dtype=float)
    w = np.asarray(mu.weights, dtype=float)
    r = np.linalg.norm(x, axis=1)
    kmax = int(np.floor(radius_cap))
    keep = r < kmax + 1
    shell = np.floor(r[keep]).astype(int)
    masses = np.bincount(shell, weights=w[keep], minlength=kmax + 1)[: kmax + 1]
    occupied = np.flatnonzero(masses > 0)
    if occupied.size < 2 or r.max() < radius_cap - 1:
        raise ValidationError("measure is compactly supported inside the radius cap; no witness")
    targets = np.where(masses > 0, 1.0 / np.where(masses > 0, masses, 1.0), 0.0)
    b = _convex_chain(targets)
    spec = S.RadialPL(tuple(range(kmax + 1)), tuple(b.tolist()))
    partial = float(np.sum(w[keep] * spec(x[keep])))
    report = WitnessReport(tuple(masses.tolist()), tuple(b.tolist()), tuple(occupied.tolist()), partial)
    return spec, report
