"""Harness for measure representations of Asplund-linear functionals.

A functional ``F`` on log-concave functions is *linear* when
``F((a . f) * (b . g)) = a F(f) + b F(g)`` and *increasing* when
``f <= g`` implies ``F(f) <= F(g)``.  The model class is

    F(f) = int h_f dmu + int h_{K_f} dnu

for a point measure ``mu`` and a sphere measure ``nu``.  This module measures
the axioms on black boxes, recovers ``nu`` from probe limits, and checks the
degenerate identities that rule out functionals on all convex functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import nnls

from . import specs as S
from ._parallel import pmap
from .errors import ValidationError
from .grid import GridSpec
from .logconcave import LogConcaveFn, asplund_sum, dilate, integral
from .measures import PointMeasure, SphereMeasure, integrate_against
from .recession import DirectionGrid, pasch_hausdorff, support_body_values

__all__ = [
    "RepresentedFunctional",
    "FunctionalOracle",
    "AuditCase",
    "AuditReport",
    "axiom_audit",
    "IdentityWitness",
    "degenerate_identity_witness",
    "ProbeBody",
    "default_probes",
    "DecompositionReport",
    "decompose_functional",
    "ContinuityCheck",
    "monotone_continuity_check",
    "ray_limit_oracle",
    "probe_function",
]


def _ext_sum(a: float, b: float) -> float:
    return np.inf if (np.isinf(a) or np.isinf(b)) else a + b


# --------------------------------------------------------------- functionals


@dataclass(frozen=True, eq=False)
class RepresentedFunctional:
    """``F(f) = int h_f dmu + int h_{K_f} dnu``."""

    mu: PointMeasure
    nu: SphereMeasure

    def __post_init__(self):
        if self.mu.dim != self.nu.dim:
            raise ValidationError("mu and nu live in different dimensions")

    @property
    def dim(self) -> int:
        return self.mu.dim

    def terms(self, f: LogConcaveFn) -> tuple:
        mu_term = integrate_against(f.support_at, self.mu)
        nu_term = integrate_against(lambda th: support_body_values(f, th), self.nu)
        return mu_term, nu_term

    def __call__(self, f: LogConcaveFn) -> float:
        return _ext_sum(*self.terms(f))

    def scaled(self, c: float) -> "RepresentedFunctional":
        return RepresentedFunctional(self.mu.scaled(c), self.nu.scaled(c))

    def to_dict(self) -> dict:
        return {"kind": "represented", "mu": self.mu.to_dict(), "nu": self.nu.to_dict()}


@dataclass(frozen=True, eq=False)
class FunctionalOracle:
    """Opaque map ``LogConcaveFn -> (-inf, inf]``; nothing about it is assumed.

    ``pure`` allows the harness to evaluate probes concurrently.
    """

    fn: Callable
    name: str = "oracle"
    pure: bool = True

    def __call__(self, f: LogConcaveFn) -> float:
        return float(self.fn(f))

    @classmethod
    def represented(cls, mu: PointMeasure, nu: SphereMeasure) -> "FunctionalOracle":
        return cls(RepresentedFunctional(mu, nu), "represented")

    @classmethod
    def first_variation(cls, g: LogConcaveFn, **kw) -> "FunctionalOracle":
        from .variation import first_variation

        return cls(lambda f: first_variation(g, f, **kw), "first_variation")

    @classmethod
    def integral(cls) -> "FunctionalOracle":
        return cls(integral, "integral")

    def scaled(self, c: float) -> "FunctionalOracle":
        fn = self.fn
        return FunctionalOracle(lambda f: c * fn(f), f"{c:g}*{self.name}", self.pure)


def _as_oracle(F) -> FunctionalOracle:
    if isinstance(F, FunctionalOracle):
        return F
    if callable(F):
        return FunctionalOracle(F, getattr(F, "__name__", type(F).__name__))
    raise ValidationError("functional must be callable")


def ray_limit_oracle(theta, lam: float = 1e6) -> FunctionalOracle:
    """``F(f) = h_f(lam theta) / lam^2``: an increasing functional that is not continuous along chains.

    It sees quadratic growth of ``h_f`` and nothing else, so it jumps when a
    chain of linear-growth support functions increases to a quadratic one.
    """
    theta = np.asarray(theta, dtype=float)

    def fn(f):
        return float(f.support_at(lam * theta[None, :])[0]) / lam**2

    return FunctionalOracle(fn, "ray_limit")


# ---------------------------------------------------------------- axiom audit


@dataclass(frozen=True)
class AuditCase:
    f: LogConcaveFn
    g: LogConcaveFn
    alpha: float = 1.0
    beta: float = 1.0


@dataclass
class AuditReport:
    residuals: list = field(default_factory=list)
    lhs: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    monotonicity_violations: list = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return float(max(self.residuals)) if self.residuals else 0.0

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if np.isinf(v) else float(v)

        return {
            "residuals": [enc(r) for r in self.residuals],
            "lhs": [enc(v) for v in self.lhs],
            "rhs": [enc(v) for v in self.rhs],
            "max_residual": enc(self.max_residual),
            "monotonicity_violations": list(self.monotonicity_violations),
        }


def _residual(lhs: float, rhs: float) -> float:
    if np.isinf(lhs) and np.isinf(rhs):
        return 0.0
    if np.isinf(lhs) or np.isinf(rhs):
        return np.inf
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def axiom_audit(F, cases, tol: float = 1e-9) -> AuditReport:
    """Linearity residual per case and monotonicity violations.

    The residual is ``|F((a.f)*(b.g)) - a F(f) - b F(g)| / max(1, |rhs|)``.
    When ``g(0) >= 1`` the sum dominates ``a . f`` pointwise, so
    ``F(a . f) <= F((a.f)*(b.g))`` must hold; failures are listed by case
    index.
    """
    F = _as_oracle(F)
    report = AuditReport()
    for i, c in enumerate(cases):
        if not isinstance(c, AuditCase):
            c = AuditCase(*c)
        af, bg = dilate(c.alpha, c.f), dilate(c.beta, c.g)
        combo = asplund_sum(af, bg)
        lhs = F(combo)
        rhs = _ext_sum(c.alpha * F(c.f), c.beta * F(c.g))
        report.lhs.append(lhs)
        report.rhs.append(rhs)
        report.residuals.append(_residual(lhs, rhs))
        try:
            g0 = float(c.g(np.zeros((1, c.g.dim)))[0])
        except ValidationError:
            g0 = 0.0  # not evaluable pointwise: skip the check
        if g0 >= 1.0:
            small = F(af)
            if not np.isinf(lhs) and small > lhs + tol * max(1.0, abs(lhs)):
                report.monotonicity_violations.append(i)
    return report


# --------------------------------------------------------- degenerate identity


@dataclass(frozen=True)
class IdentityWitness:
    residual: float
    sandwich_radius: float | None = None
    sandwich_eps: float | None = None
    sandwich_violation: float | None = None

    @property
    def sandwich_ok(self) -> bool:
        return self.sandwich_violation is None or self.sandwich_violation <= 0.0

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "sandwich_radius": self.sandwich_radius,
            "sandwich_eps": self.sandwich_eps,
            "sandwich_violation": self.sandwich_violation,
        }


def degenerate_identity_witness(phi: S.Spec, p, grid: GridSpec, r: float | None = None) -> IdentityWitness:
    """Residual of ``phi + 1_{p} = phi(p) + 1_{p}`` over the nodes of ``grid`` and ``p``.

    Here ``1_{p}`` is the convex indicator (``0`` at ``p``, ``+inf``
    elsewhere), so a linear functional finite on all convex functions only
    sees ``phi(p)``.  With ``r`` the sandwich

        (phi(0) - eps) + 1_{rB} <= phi + 1_{rB} <= (phi(0) + eps) + 1_{rB},

    with ``eps`` the oscillation of ``phi`` on ``rB`` at the nodes, is
    checked too; its largest violation is reported (``<= 0`` means it holds).
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (grid.dim,):
        raise ValidationError("p must be a point of the grid's dimension")
    phi_p = float(phi(p[None, :])[0])
    if not np.isfinite(phi_p):
        raise ValidationError("phi(p) must be finite")
    pts = np.vstack([grid.nodes().reshape(-1, grid.dim), p[None, :]])
    at_p = np.linalg.norm(pts - p, axis=1) <= 1e-12 * (1 + np.linalg.norm(p))
    vals = phi(pts)
    lhs = np.where(at_p, vals, np.inf)
    rhs = np.where(at_p, phi_p, np.inf)
    both = np.isfinite(lhs) & np.isfinite(rhs)
    if (np.isfinite(lhs) != np.isfinite(rhs)).any():
        residual = np.inf
    else:
        residual = float(np.max(np.abs(lhs[both] - rhs[both])))
    if r is None:
        return IdentityWitness(residual)
    ball = np.linalg.norm(pts, axis=1) <= r
    phi0 = float(phi(np.zeros((1, grid.dim)))[0])
    inner = vals[ball]
    eps = float(np.max(np.abs(inner - phi0)))
    violation = float(max(np.max((phi0 - eps) - inner), np.max(inner - (phi0 + eps))))
    return IdentityWitness(residual, r, eps, violation)


# -------------------------------------------------------------- decomposition


@dataclass(frozen=True)
class ProbeBody:
    """A convex polygon (or interval) used as probe ``K``, with an optional shift radius.

    With ``shift > 0`` the body enters as ``K + shift B`` and ``shift B``
    separately, so that ``h_K = h_{K + rB} - h_{rB}`` also covers bodies
    that do not contain the origin.
    """

    vertices: tuple
    shift: float = 0.0

    @property
    def polytope(self):
        return S.SupportOfPolytope(self.vertices)

    def support(self, theta) -> np.ndarray:
        return self.polytope(np.asarray(theta, dtype=float))

    def contains_origin(self) -> bool:
        return bool(S.IndicatorPolytope(self.vertices)(np.zeros((1, len(self.vertices[0]))))[0] == 0)


def probe_function(support: S.Spec, R: float, dim: int | None = None) -> LogConcaveFn:
    """Log-concave ``f`` with ``h_f = max(support - R, 0)``."""
    return LogConcaveFn.from_support(S.ShiftedCone(support, R), dim=dim or support.dim)


def default_probes(dim: int = 2, phases: int = 16) -> list:
    """Regular ``m``-gons, ``m`` in ``{3, 4, 8, 16}``, rotated through ``phases`` angles, plus shifted translates.

    Triangles are included because polygons with ``4 | m`` only excite
    angular frequencies divisible by 4; their support functions alone cannot
    separate 16 candidate directions.
    """
    if dim == 1:
        return [ProbeBody(((-1.0,), (1.0,))), ProbeBody(((0.0,), (1.0,))), ProbeBody(((-1.0,), (0.0,))),
                ProbeBody(((1.0,), (2.0,)), shift=2.0)]
    out = []
    for m in (3, 4, 8, 16):
        for j in range(phases if m == 3 else max(1, phases // m)):
            out.append(ProbeBody(S.regular_polygon(m, 1.0, phase=2 * np.pi * j / phases)))
    # bodies away from 0 enter through the shift device; kept small so that
    # h_{K + rB} stays below R on the bulk of a compactly concentrated mu
    for c in ((0.75, 0.0), (0.0, 0.75), (-0.5, -0.5)):
        out.append(ProbeBody(S.regular_polygon(4, 0.25, center=c), shift=0.75))
    return out


@dataclass
class DecompositionReport:
    directions: np.ndarray
    weights: np.ndarray
    limits: np.ndarray
    raw: np.ndarray
    R_sequence: tuple
    residual: float
    finite: list

    @property
    def nu(self) -> SphereMeasure:
        keep = self.weights > 0
        return SphereMeasure(self.directions[keep], self.weights[keep], dim=self.directions.shape[1])

    def to_dict(self) -> dict:
        return {
            "directions": self.directions.tolist(),
            "weights": self.weights.tolist(),
            "limits": self.limits.tolist(),
            "raw": self.raw.tolist(),
            "R_sequence": list(self.R_sequence),
            "residual": self.residual,
            "finite": list(self.finite),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _extrapolate(R, values) -> float:
    """Intercept of the least-squares line ``v = L + c / R``."""
    A = np.stack([np.ones(len(R)), 1.0 / np.asarray(R, dtype=float)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(coef[0])


def decompose_functional(F, bodies=None, R_sequence=(10.0, 20.0, 40.0), directions=None,
                         dim: int = 2) -> DecompositionReport:
    """Recover the sphere part ``nu`` of ``F`` from probe limits.

    For each body ``K`` containing 0, ``F(f_R)`` with ``h_{f_R} = max(h_K - R, 0)``
    tends to ``int h_K dnu``; the limit is extrapolated linearly in ``1/R``.
    The limits are fitted by non-negative least squares against
    ``h_K(u_j)`` over the candidate ``directions`` (default 16 equally
    spaced).  ``residual`` is the fit error relative to the largest limit.
    """
    F = _as_oracle(F)
    bodies = default_probes(dim) if bodies is None else [b if isinstance(b, ProbeBody) else ProbeBody(b)
                                                          for b in bodies]
    if directions is None:
        directions = DirectionGrid(dim, 16).vectors
    directions = np.asarray(directions, dtype=float)
    jobs = []
    for b in bodies:
        if b.shift > 0:
            jobs.append(S.Sum((b.polytope, S.NormMultiple(b.shift))))
            jobs.append(S.NormMultiple(b.shift))
        elif b.contains_origin():
            jobs.append(b.polytope)
        else:
            raise ValidationError("probe bodies must contain 0 unless a shift radius is given")
    uniq = {}
    for j in jobs:
        uniq.setdefault(repr(j), j)
    keys = list(uniq)
    evals = pmap(lambda kR: F(probe_function(uniq[kR[0]], kR[1], dim)),
                 [(k, R) for k in keys for R in R_sequence], pure=F.pure)
    table = np.array(evals, dtype=float).reshape(len(keys), len(R_sequence))
    if not np.isfinite(table).all():
        bad = [keys[i] for i in range(len(keys)) if not np.isfinite(table[i]).all()]
        raise ValidationError(f"functional diverges on probes: {bad}")
    limit = {k: _extrapolate(R_sequence, table[i]) for i, k in enumerate(keys)}
    raw_of = {k: table[i] for i, k in enumerate(keys)}
    limits, raws, rows = [], [], []
    idx = 0
    for b in bodies:
        if b.shift > 0:
            a, c = repr(jobs[idx]), repr(jobs[idx + 1])
            idx += 2
            limits.append(limit[a] - limit[c])
            raws.append(raw_of[a] - raw_of[c])
        else:
            a = repr(jobs[idx])
            idx += 1
            limits.append(limit[a])
            raws.append(raw_of[a])
        rows.append(b.support(directions))
    A = np.array(rows)
    L = np.array(limits)
    w, rnorm = nnls(A, L)
    scale = max(1.0, float(np.max(np.abs(L))))
    return DecompositionReport(directions, w, L, np.array(raws), tuple(R_sequence), float(rnorm) / scale,
                               [True] * len(bodies))


# ---------------------------------------------------------- monotone continuity


@dataclass
class ContinuityCheck:
    k_sequence: tuple
    values: list
    limit_value: float
    pointwise_monotone: bool
    values_monotone: bool

    @property
    def limit_gap(self) -> float:
        last, lim = self.values[-1], self.limit_value
        if np.isinf(lim) and np.isinf(last):
            return 0.0
        if np.isinf(lim) or np.isinf(last):
            return np.inf
        return abs(lim - last) / max(1.0, abs(lim))

    def to_dict(self) -> dict:
        def enc(v):
            return "inf" if np.isinf(v) else float(v)

        return {
            "k_sequence": list(self.k_sequence),
            "values": [enc(v) for v in self.values],
            "limit_value": enc(self.limit_value),
            "limit_gap": enc(self.limit_gap),
            "pointwise_monotone": self.pointwise_monotone,
            "values_monotone": self.values_monotone,
        }


def _chain_member(phi: S.Spec, k: float | None, dim: int) -> LogConcaveFn:
    h = phi if k is None else pasch_hausdorff(phi, k)
    return LogConcaveFn(spec=S.conjugate_spec(h), support=h, dim=dim)


def monotone_continuity_check(F, phi: S.Spec, k_sequence=(1, 2, 4, 8, 16), dim: int = 2,
                              samples=None, tol: float = 1e-12) -> ContinuityCheck:
    """``F`` along ``f_k`` with ``h_{f_k}`` the Pasch-Hausdorff envelope ``phi_k`` of ``phi``.

    ``phi_k`` increases to ``phi``, so ``-log f_k = phi* + 1_{kB}`` decreases
    and ``f_k`` increases to ``f`` with ``h_f = phi``.  Pointwise
    monotonicity of ``f_k`` is checked at ``samples`` (default: a small grid
    in ``[-4, 4]^dim``).
    """
    F = _as_oracle(F)
    ks = tuple(sorted(float(k) for k in k_sequence))
    members = [_chain_member(phi, k, dim) for k in ks]
    target = _chain_member(phi, None, dim)
    if samples is None:
        ax = np.linspace(-4, 4, 17)
        samples = np.stack(np.meshgrid(*([ax] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    pointwise = True
    if all(m.spec is not None for m in members):
        prev = None
        for m in members:
            v = m(samples)
            if prev is not None and (v < prev - tol).any():
                pointwise = False
            prev = v
    values = pmap(F, members, pure=F.pure)
    lim = F(target)
    mono = all(b >= a - tol * max(1.0, abs(a)) for a, b in zip(values, values[1:]) if np.isfinite(a))
    return ContinuityCheck(ks, list(values), lim, pointwise, mono)
