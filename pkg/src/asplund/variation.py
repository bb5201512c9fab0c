"""First variation of the integral and its representation by measures.

``delta(g, f) = lim_{t -> 0+} (int g * (t . f) - int g) / t`` where ``*`` is
the Asplund sum.  Each ``I(t) = int g * (t . f)`` is computed from
``h_g + t h_f`` by one back-transform onto a box that grows with ``t``; the
one-sided derivative is Richardson-extrapolated along ``t = t0 / 2^k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import specs as S
from .conjugate import auto_dual_grid, legendre_transform
from .errors import IndeterminateError, TruncationError, ValidationError
from .grid import ConvexGridFunction, GridSpec
from .logconcave import MASS_TOLERANCE, LogConcaveFn, _check_truncation, direction_samples, grid_integral
from .measures import (
    SphereMeasure,
    integrate_against,
    moment_measure,
    polytope_of_support,
    surface_measure,
)
from .recession import support_body_values

__all__ = [
    "VariationReport",
    "ContinuityReport",
    "first_variation",
    "variation_report",
    "verify_representation",
    "essential_continuity_probe",
    "sum_integral",
]

# tail level: exp(-LEVEL) is far below the mass tolerance
LEVEL = -math.log(MASS_TOLERANCE) + 3.0

DETECTOR = {"growth_factor": 2.0, "halvings": 3, "min_exponent": 0.3}


# ------------------------------------------------------------------ helpers


def _support_values(f: LogConcaveFn, grid: GridSpec) -> np.ndarray:
    if f.support is not None:
        return f.support(grid.nodes())
    if f.parts:
        return sum(_support_values(p, grid) for p in f.parts)
    return legendre_transform(f.phi, grid).values


def _body_directions(fs, dim):
    theta = direction_samples(dim, 720)
    extra = []
    for f in fs:
        if f.spec is not None and dim == 2:
            try:
                poly = polytope_of_support(f.spec, dim)
            except ValidationError:
                poly = None
            if poly is not None and poly.v.shape[0] >= 3:
                extra.append(poly.facets()[0])
    if extra:
        theta = np.vstack([theta] + extra)
    return theta


def _enlargement(f: LogConcaveFn, t: float, theta: np.ndarray):
    """Per-direction outward reach of ``t . f``: ``t h_{K_f}`` or a tail radius."""
    hk = support_body_values(f, theta)
    if np.isfinite(hk).all():
        return t * hk
    # unbounded support: radius where t phi(x/t) exceeds its minimum by LEVEL
    phi = f.spec if f.spec is not None else (S.conjugate_spec(f.support) if f.support is not None else None)
    if phi is None:
        if not f.has_grid:
            raise ValidationError("cannot bound the support of t . f")
        pts, vals = f.phi.finite_points()
        near = vals <= vals.min() + LEVEL / t
        return np.full(len(theta), t * float(np.max(np.linalg.norm(pts[near], axis=1))))
    dirs = direction_samples(f.dim, 64)
    base = float(np.min(phi(np.vstack([np.zeros((1, f.dim)), dirs * 1e-3]))))
    target = base + LEVEL / t
    reach = 0.0
    for d in dirs:
        lo, hi = 0.0, 1.0
        while phi(hi * d[None, :])[0] < target:
            lo, hi = hi, 2 * hi
            if hi > 1e12:
                raise ValidationError("t . f does not decay; first variation undefined")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if phi(mid * d[None, :])[0] < target:
                lo = mid
            else:
                hi = mid
        reach = max(reach, hi)
    return np.full(len(theta), t * reach)


def _out_grid(g: LogConcaveFn, reach_lo, reach_hi, max_points: int, lattice: bool, body=None) -> GridSpec:
    """Box of ``g`` grown by the reaches.

    With ``lattice`` the nodes stay on the node lattice of ``g``'s grid (a
    multiple of its spacing when the box would need more than ``max_points``
    per axis), which keeps smooth integrands consistent across ``t``.
    Otherwise the box is ``body`` (the bounding box ``(lo, hi)`` of the
    summed support) with about ``g``'s spacing, so that flat boundaries
    facing the axes lie on nodes.
    """
    base = g.phi.grid
    if not lattice:
        lo, hi = (np.asarray(b, dtype=float) for b in body)
        n = [min(max(int(round((b - a) / h)) + 1, 3), max_points)
             for a, b, h in zip(lo, hi, base.spacing)]
        return GridSpec(lo, hi, n)
    lo, hi, n = [], [], []
    for a, b, h, rl, rh in zip(base.lower, base.upper, base.spacing, reach_lo, reach_hi):
        kl = math.ceil(rl / h - 1e-9)
        kh = math.ceil(rh / h - 1e-9)
        m = int(round((b - a) / h)) + kl + kh + 1
        stride = max(1, math.ceil((m - 1) / (max_points - 1)))
        kl = stride * math.ceil(kl / stride)
        kh = stride * math.ceil(kh / stride)
        m = (int(round((b - a) / h)) + kl + kh) // stride + 1
        lo.append(a - kl * h)
        hi.append(a - kl * h + (m - 1) * stride * h)
        n.append(max(m, 3))
    return GridSpec(lo, hi, n)


def _axis_reach(H, axis, dim, target, sign) -> float:
    """About the smallest ``|y|`` along ``sign * e_axis`` where the slope of ``H`` passes ``target``.

    Doubling then bisection; a slope that stops changing means the support
    body is bounded in this direction and the current ``|y|`` is returned.
    """
    e = np.zeros(dim)
    e[axis] = sign

    def slope(y):
        eps = 1e-6 * y
        pts = np.stack([(y - eps) * e, (y + eps) * e])
        return float(np.diff(H(pts))[0] / (2 * eps))

    def reached(s):
        return s >= sign * target - 1e-9 * (1 + abs(target))

    y, last = 0.25, None
    for _ in range(60):
        s = slope(y)
        if reached(s):
            break
        if last is not None and abs(s - last) <= 1e-9 * (1 + abs(s)):
            return y
        last = s
        y *= 2
    else:
        raise ValidationError("support functions do not reach the output box")  # pragma: no cover
    lo, hi = y / 2, y
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if reached(slope(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def _dual_for(g: LogConcaveFn, f: LogConcaveFn, t: float, out: GridSpec, max_points: int) -> GridSpec:
    dim = g.dim

    def H(y):
        return g.support_at(y) + (t * f.support_at(y) if t > 0 else 0.0)

    auto = auto_dual_grid(g.phi, max_points=max_points)
    lo, hi, npts = [], [], []
    for axis in range(dim):
        b = _axis_reach(H, axis, dim, out.upper[axis], +1)
        a = _axis_reach(H, axis, dim, out.lower[axis], -1)
        a = min(-1.1 * a, auto.lower[axis])
        b = max(1.1 * b, auto.upper[axis])
        # an exact divisor of g's spacing keeps g's nodes on the dual lattice,
        # which makes the t = 0 back-transform exact at those nodes
        h = g.phi.grid.spacing[axis]
        cap = (b - a) / (max_points - 1)
        k = max(1, math.ceil(h / auto.spacing[axis] - 1e-2))
        while k > 1 and h / k < cap:
            k -= 1
        step = max(h / k, cap)
        k = math.ceil(-a / step)
        m = k + math.ceil(b / step) + 1
        lo.append(-k * step)
        hi.append((m - 1 - k) * step)
        npts.append(m)
    return GridSpec(lo, hi, npts)


def _inside(grid: GridSpec, theta: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """Nodes ``x`` with ``<x, theta_j> <= bound_j`` for every direction, row by row."""
    x = grid.nodes()
    tol = 1e-9 * (1 + float(np.max(np.abs(bound))))
    flat = x.reshape(-1, grid.dim)
    out = np.empty(len(flat), dtype=bool)
    step = max(1, 2_000_000 // len(theta))
    for i in range(0, len(flat), step):
        out[i:i + step] = np.max(flat[i:i + step] @ theta.T - bound, axis=-1) <= tol
    return out.reshape(grid.shape)


def sum_integral(g: LogConcaveFn, f: LogConcaveFn, t: float, max_points: int | None = None):
    """``int g * (t . f)`` and the tabulated ``-log`` of the sum (``t = 0`` gives ``int g``).

    Raises :class:`TruncationError` when the computed sum carries mass across
    the output box.
    """
    dim = g.dim
    if max_points is None:
        max_points = 20001 if dim == 1 else 513
    theta = _body_directions([g, f], dim)
    hg = support_body_values(g, theta)
    if t > 0:
        reach = _enlargement(f, t, theta)
    else:
        reach = np.zeros(len(theta))
    # per-axis box growth
    eye = np.vstack([np.eye(dim), -np.eye(dim)])
    axis_reach = _enlargement(f, t, eye) if t > 0 else np.zeros(2 * dim)
    bound = hg + reach
    bounded_f = t == 0 or np.isfinite(support_body_values(f, theta)).all()
    masked = bool(np.isfinite(bound).all() and bounded_f)
    body = None
    if masked:
        box = support_body_values(g, eye) + axis_reach
        body = (-box[dim:], box[:dim])
    out = _out_grid(g, np.maximum(axis_reach[dim:], 0), np.maximum(axis_reach[:dim], 0), max_points,
                    lattice=not masked, body=body)
    dual = _dual_for(g, f, t, out, max_points)
    H = _support_values(g, dual)
    if t > 0:
        H = H + t * _support_values(f, dual)
    # one extra ring of nodes to detect mass crossing the box
    h = out.spacing
    ring = GridSpec(np.asarray(out.lower) - h, np.asarray(out.upper) + h, np.asarray(out.points) + 2)
    vals = legendre_transform(ConvexGridFunction(dual, H), ring).values
    if masked:
        vals = np.where(_inside(ring, theta, bound), vals, np.inf)
    fvals = np.exp(-vals)
    inner = (slice(1, -1),) * dim
    core = fvals[inner]
    edge = fvals.copy()
    edge[inner] = 0.0
    if np.max(edge) >= MASS_TOLERANCE * np.max(core):
        raise TruncationError(f"Asplund sum at t={t:g} leaks mass across the quadrature box")
    psi = ConvexGridFunction(out, vals[inner])
    return grid_integral(psi), psi


# ------------------------------------------------------------------- reports


def _ext(v):
    # JSON has no inf or nan: "inf" and null stand in
    if v is None or np.isnan(v):
        return None
    return "inf" if v == np.inf else float(v)


@dataclass
class VariationReport:
    """Numerical first variation next to its representation by measures."""

    delta_numeric: float
    mu_term: float = float("nan")
    nu_term: float = float("nan")
    status: str = "converged"
    t_sequence: list = field(default_factory=list)
    integrals: list = field(default_factory=list)
    quotients: list = field(default_factory=list)
    integral_zero: float = float("nan")
    detector: dict = field(default_factory=lambda: dict(DETECTOR))
    nu_valid: bool = True
    notes: list = field(default_factory=list)

    @property
    def representation_total(self) -> float:
        return self.mu_term + self.nu_term

    @property
    def relative_gap(self):
        d, r = self.delta_numeric, self.representation_total
        if not (np.isfinite(d) and np.isfinite(r)):
            return None
        return abs(d - r) / max(1.0, abs(d))

    @property
    def consistent(self) -> bool:
        """Both sides infinite, or both finite with a gap below 2%."""
        d, r = self.delta_numeric, self.representation_total
        if np.isinf(d) or np.isinf(r):
            return bool(np.isinf(d) and np.isinf(r))
        gap = self.relative_gap
        return gap is not None and gap <= 0.02

    def to_dict(self) -> dict:
        return {
            "delta": _ext(self.delta_numeric),
            "mu_term": _ext(self.mu_term),
            "nu_term": _ext(self.nu_term),
            "representation_total": _ext(self.representation_total),
            "relative_gap": self.relative_gap,
            "status": self.status,
            "t_sequence": list(self.t_sequence),
            "integrals": [_ext(v) for v in self.integrals],
            "quotients": [_ext(v) for v in self.quotients],
            "integral_zero": _ext(self.integral_zero),
            "detector": dict(self.detector),
            "nu_valid": self.nu_valid,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False)

    @classmethod
    def from_dict(cls, data: dict) -> "VariationReport":
        def val(v):
            return np.inf if v == "inf" else (float("nan") if v is None else float(v))

        return cls(
            delta_numeric=val(data["delta"]),
            mu_term=val(data.get("mu_term")),
            nu_term=val(data.get("nu_term")),
            status=data.get("status", "converged"),
            t_sequence=list(data.get("t_sequence", [])),
            integrals=[val(v) for v in data.get("integrals", [])],
            quotients=[val(v) for v in data.get("quotients", [])],
            integral_zero=val(data.get("integral_zero")),
            detector=dict(data.get("detector", DETECTOR)),
            nu_valid=bool(data.get("nu_valid", True)),
            notes=list(data.get("notes", [])),
        )

    def table(self) -> str:
        """Fixed-width text rendering."""
        rows = [
            ("delta (numeric)", self.delta_numeric),
            ("mu term", self.mu_term),
            ("nu term", self.nu_term),
            ("representation", self.representation_total),
        ]
        lines = [f"{k:<18}{_fmt(v):>16}" for k, v in rows]
        gap = self.relative_gap
        lines.append(f"{'relative gap':<18}{('n/a' if gap is None else f'{gap:.3e}'):>16}")
        lines.append(f"{'status':<18}{self.status:>16}")
        lines.append("")
        lines.append(f"{'t':>12}{'I(t)':>18}{'quotient':>18}")
        for t, i, q in zip(self.t_sequence, self.integrals, self.quotients):
            lines.append(f"{t:>12.6g}{i:>18.10g}{q:>18.10g}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "n/a"
    if np.isinf(v):
        return "+inf"
    return f"{v:.10g}"


def _detect(t, q) -> str:
    """``divergent``, ``converged`` or ``indeterminate`` from the tail of the quotients.

    Divergent: the last quotient exceeds ``growth_factor`` times the one
    ``halvings`` levels earlier and the log-log growth exponent over that span
    is at least ``min_exponent`` (a ``t^(-1/2)`` blow-up has exponent 1/2,
    convergence at rate ``t`` has exponent near 0).
    """
    k = DETECTOR["halvings"]
    if len(q) <= k:
        return "converged"
    a, b = q[-1 - k], q[-1]
    if a > 0 and b > DETECTOR["growth_factor"] * a:
        expo = math.log(b / a) / math.log(t[-1 - k] / t[-1])
        if expo >= DETECTOR["min_exponent"]:
            return "divergent"
    # convergence: successive differences shrink
    d = np.abs(np.diff(q[-k - 1:]))
    scale = max(1.0, abs(q[-1]))
    if d[-1] <= 0.6 * d[0] + 1e-9 * scale or d[-1] <= 1e-6 * scale:
        return "converged"
    return "indeterminate"


def variation_report(g: LogConcaveFn, f: LogConcaveFn, t0: float = 0.1, levels: int = 6,
                     max_points: int | None = None) -> VariationReport:
    """Run the ``t``-sequence and the divergence detector; see :func:`first_variation`."""
    if not t0 > 0 or levels < 1:
        raise ValidationError("need t0 > 0 and levels >= 1")
    if g.dim != f.dim:
        raise ValidationError("g and f live in different dimensions")
    _check_truncation(g)
    I0, _ = sum_integral(g, f, 0.0, max_points)
    if not (0 < I0 < np.inf):
        raise ValidationError(f"int g = {I0!r} is not in (0, inf)")
    ts = [t0 / 2**k for k in range(levels + 1)]
    integrals, quotients = [], []
    for t in ts:
        It, _ = sum_integral(g, f, t, max_points)
        integrals.append(It)
        quotients.append((It - I0) / t)
    status = _detect(ts, quotients)
    report = VariationReport(
        delta_numeric=np.nan, t_sequence=ts, integrals=integrals, quotients=quotients,
        integral_zero=I0, status=status,
    )
    if status == "divergent":
        report.delta_numeric = np.inf
    else:
        # D(t) = delta + c t + ...: eliminate the linear term
        report.delta_numeric = 2 * quotients[-1] - quotients[-2]
    return report


def first_variation(g: LogConcaveFn, f: LogConcaveFn, t0: float = 0.1, levels: int = 6,
                    max_points: int | None = None) -> float:
    """``delta(g, f)``, ``+inf`` when the difference quotients blow up.

    Parameters
    ----------
    g, f : LogConcaveFn
        ``g`` needs a grid (its box is the quadrature window at ``t = 0``);
        ``f`` may be analytic.
    t0, levels : float, int
        The quotients use ``t = t0, t0/2, ..., t0/2^levels``.

    Raises
    ------
    IndeterminateError
        The quotients neither settle nor trip the divergence detector.
    TruncationError
        Mass crosses a quadrature box.
    """
    report = variation_report(g, f, t0, levels, max_points)
    if report.status == "indeterminate":
        raise IndeterminateError(
            "difference quotients neither converge nor diverge clearly: "
            + ", ".join(f"{q:.6g}" for q in report.quotients)
        )
    return report.delta_numeric


def verify_representation(g: LogConcaveFn, f: LogConcaveFn, t0: float = 0.1, levels: int = 6,
                          max_points: int | None = None) -> VariationReport:
    """Compare ``delta(g, f)`` with ``int h_f dmu_g + int h_{K_f} dnu_g``.

    When the support of ``g`` is not an explicit polytope (or all of
    ``R^n``) the surface term cannot be computed exactly; it is then set to 0,
    which is correct exactly for essentially continuous ``g``, and
    ``nu_valid`` is cleared.
    """
    report = variation_report(g, f, t0, levels, max_points)
    mu = moment_measure(g)
    report.mu_term = integrate_against(f.support_at, mu)
    try:
        nu = surface_measure(g)
    except ValidationError:
        nu = SphereMeasure(np.zeros((0, g.dim)), np.zeros(0), dim=g.dim)
        report.nu_valid = False
        report.notes.append("surface term assumes g essentially continuous")
    report.nu_term = integrate_against(lambda th: support_body_values(f, th), nu)
    if report.status == "indeterminate":
        report.notes.append("difference quotients indeterminate")
    return report


# ------------------------------------------------------- essential continuity


@dataclass(frozen=True)
class ContinuityReport:
    essentially_continuous: bool
    nu_mass: float

    def __bool__(self):
        return self.essentially_continuous


def essential_continuity_probe(g: LogConcaveFn, tol: float = 1e-12, samples: int = 4096) -> ContinuityReport:
    """Whether ``g`` vanishes on the boundary of its support (``nu_g = 0``).

    Polytopal supports use :func:`surface_measure`; round supports (balls)
    integrate ``g`` along the boundary circle with ``samples`` points.
    """
    if g.spec is None:
        raise ValidationError("the probe needs an analytic density")
    try:
        poly = polytope_of_support(g.spec, g.dim)
        mass = 0.0 if poly is None else surface_measure(g).mass
    except ValidationError:
        theta = direction_samples(g.dim, samples)
        dom = S.domain_support(g.spec, theta)
        if dom is None or not np.isfinite(dom).all() or np.ptp(dom) > 1e-12 * (1 + np.max(dom)):
            raise ValidationError("unsupported boundary type") from None
        r = float(dom[0])
        vals = np.exp(-g.spec(r * theta))
        per = 2.0 if g.dim == 1 else 2 * np.pi * r
        mass = float(np.mean(vals) * per)
    return ContinuityReport(bool(mass <= tol), mass)
