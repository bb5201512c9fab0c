"""Batch front end: ``asplund <command> ...``.

Inputs are JSON files holding either an analytic spec (an object with a
``"kind"`` key), a log-concave function (``{"neg_log": ...}`` or
``{"support": ...}``), a measure, or a harness configuration.  Grid
functions may also be read from CSV with columns ``x1[,x2],value``.

Exit status is 0 on success, 2 on invalid input and 3 on a numerical
failure (divergence, truncation, indeterminate limit).  Failures print one
JSON object ``{"error": ..., "type": ..., "message": ...}`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import specs as S
from .conjugate import auto_dual_grid, legendre_transform
from .errors import NumericalError, ValidationError
from .grid import ConvexGridFunction, GridSpec
from .logconcave import LogConcaveFn, asplund_sum, dilate
from .measures import PointMeasure, SphereMeasure, measure_from_dict, minkowski_check, moment_measure, surface_measure
from .recession import DirectionGrid, pasch_hausdorff, recession_function
from .riesz_lab import (
    AuditCase,
    FunctionalOracle,
    ProbeBody,
    axiom_audit,
    decompose_functional,
    default_probes,
    ray_limit_oracle,
)
from .variation import _enlargement, variation_report, verify_representation

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


# ------------------------------------------------------------------ loading


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc.msg}") from None


def _inline_or_path(obj):
    return _read_json(obj) if isinstance(obj, str) else obj


def _grid_from_csv(text: str) -> ConvexGridFunction:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise ValidationError("CSV grid function needs a header and rows")
    dim = len(rows[0]) - 1
    if dim not in (1, 2):
        raise ValidationError("CSV grid functions have one or two coordinate columns")
    try:
        coords = np.array([[float(c) for c in r[:dim]] for r in rows[1:]])
    except ValueError:
        raise ValidationError("non-numeric coordinate in CSV") from None
    axes = [np.unique(coords[:, i]) for i in range(dim)]
    grid = GridSpec([a[0] for a in axes], [a[-1] for a in axes], [len(a) for a in axes])
    if np.prod(grid.shape) != len(coords):
        raise ValidationError("CSV rows do not form a full tensor grid")
    idx = [np.searchsorted(a, coords[:, i]) for i, a in enumerate(axes)]
    vals = np.full(grid.shape, np.nan)
    vals[tuple(idx)] = [float(r[-1]) for r in rows[1:]]
    return ConvexGridFunction(grid, vals)


def _grid_args(args, dim: int | None):
    if args.box is None:
        return None
    d = dim or 1
    pts = args.points or (257 if d == 2 else 2049)
    return GridSpec([args.box[0]] * d, [args.box[1]] * d, pts)


def _default_grid(f: LogConcaveFn, points: int | None) -> GridSpec:
    """Box around the effective support of ``f``: its body, else where ``-log f`` clears the tail level."""
    d = f.dim
    e = np.vstack([np.eye(d), -np.eye(d)])
    probe = LogConcaveFn(spec=f.spec, support=f.support if f.spec is None else None, dim=d)
    reach = _enlargement(probe, 1.0, e)
    pts = points or (257 if d == 2 else 2049)
    return GridSpec(-reach[d:], reach[:d], pts)


def load_function(source, grid: GridSpec | None = None, dim: int | None = None,
                  points: int | None = None) -> LogConcaveFn:
    """A :class:`LogConcaveFn` from a path (JSON or CSV) or an already parsed JSON object."""
    if isinstance(source, str) and source.endswith(".csv"):
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read {source}: {exc.strerror}") from None
        return LogConcaveFn.from_grid(_grid_from_csv(text))
    data = _inline_or_path(source)
    if not isinstance(data, dict):
        raise ValidationError("function input must be a JSON object")
    try:
        if "kind" in data:
            spec = S.spec_from_dict(data)
            d = spec.dim or dim or (grid.dim if grid is not None else None)
            f = LogConcaveFn(spec=spec, grid=grid, dim=d)
        elif "neg_log" in data or "support" in data:
            f = LogConcaveFn.from_dict(data, grid=grid)
        else:
            raise ValidationError("function JSON needs 'kind', 'neg_log' or 'support'")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed function JSON: {exc}") from None
    if dim is not None and f.dim != dim:
        raise ValidationError(f"function has dimension {f.dim}, expected {dim}")
    if f.grid is None and f.spec is not None:
        f = LogConcaveFn(spec=f.spec, grid=_default_grid(f, points), dim=f.dim)
    return f


def load_spec(source) -> S.Spec:
    data = _inline_or_path(source)
    if not isinstance(data, dict) or "kind" not in data:
        raise ValidationError("expected an analytic spec JSON object with a 'kind' key")
    try:
        return S.spec_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed spec JSON: {exc}") from None


def load_measure(source):
    if isinstance(source, str) and source.endswith(".csv"):
        with open(source) as fh:
            text = fh.read()
        header = next(csv.reader(io.StringIO(text)))
        cls = SphereMeasure if header[0].startswith("theta") else PointMeasure
        return cls.from_csv(text)
    data = _inline_or_path(source)
    try:
        return measure_from_dict(data)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed measure JSON: {exc}") from None


# ------------------------------------------------------------------ output


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def _emit_measure(m, out: str | None) -> None:
    if out is not None and out.endswith(".csv"):
        _emit(m.to_csv(), out)
    else:
        _emit(_json(m.to_dict()), out)


# ------------------------------------------------------------------ commands


def cmd_legendre(args) -> int:
    if args.phi.endswith(".csv"):
        phi = load_function(args.phi).phi
    else:
        spec = load_spec(args.phi)
        dim = spec.dim or args.dim or 1
        grid = _grid_args(args, dim)
        if grid is None:
            raise ValidationError("legendre needs --box for analytic inputs")
        phi = S.sample_to_grid(spec, grid)
    if args.dual_box is not None:
        d = phi.dim
        dual = GridSpec([args.dual_box[0]] * d, [args.dual_box[1]] * d, args.dual_points or phi.grid.points[0])
    else:
        dual = auto_dual_grid(phi)
    _emit(legendre_transform(phi, dual).to_csv(), args.out)
    return EXIT_OK


def cmd_asplund(args) -> int:
    dim = _infer_dim(args, args.f, args.g)
    grid = _grid_args(args, dim)
    f = load_function(args.f, grid, dim, args.points)
    g = load_function(args.g, grid, dim, args.points)
    s = asplund_sum(dilate(args.alpha, f), dilate(args.beta, g))
    if args.out is not None and args.out.endswith(".csv"):
        _emit(s.phi.to_csv(), args.out)
    else:
        _emit(_json({"neg_log": {"kind": "tabulated", "table": s.phi.to_dict()}, "dim": s.dim}), args.out)
    return EXIT_OK


def cmd_recession(args) -> int:
    spec = load_spec(args.phi)
    dim = spec.dim or args.dim or 2
    r = recession_function(spec, DirectionGrid(dim, args.directions), method=args.method)
    _emit(r.to_csv(), args.out)
    return EXIT_OK


def cmd_pasch_hausdorff(args) -> int:
    spec = load_spec(args.phi)
    dim = spec.dim or args.dim or 2
    if not args.k > 0:
        raise ValidationError("k must be positive")
    grid = _grid_args(args, dim) if not S.huber_supported(spec) else None
    phik = pasch_hausdorff(spec, args.k, grid=grid)
    _emit(_json(S.spec_to_dict(phik)), args.out)
    return EXIT_OK


def cmd_moment_measure(args) -> int:
    g = load_function(args.g, _grid_args(args, args.dim), args.dim, args.points)
    _emit_measure(moment_measure(g), args.out)
    return EXIT_OK


def cmd_surface_measure(args) -> int:
    g = load_function(args.g, _grid_args(args, args.dim), args.dim, args.points)
    _emit_measure(surface_measure(g, edge_quadrature=args.panels), args.out)
    return EXIT_OK


def _infer_dim(args, *sources) -> int | None:
    """``--dim``, else the first input that fixes a dimension."""
    if args.dim is not None:
        return args.dim
    for src in sources:
        if isinstance(src, str) and src.endswith(".csv"):
            continue
        data = _inline_or_path(src)
        if isinstance(data, dict) and "kind" in data:
            d = load_spec(data).dim
        elif isinstance(data, dict):
            d = data.get("dim")
        else:
            d = None
        if d is not None:
            return int(d)
    return None


def _variation_inputs(args):
    dim = _infer_dim(args, args.g, args.f)
    grid = _grid_args(args, dim)
    g = load_function(args.g, grid, dim, args.points)
    f = load_function(args.f, grid, dim, args.points)
    return g, f


def _emit_report(rep, args) -> None:
    if args.table:
        _emit(rep.table(), args.out)
    else:
        _emit(rep.to_json(), args.out)


def cmd_first_variation(args) -> int:
    g, f = _variation_inputs(args)
    rep = variation_report(g, f, t0=args.t0, levels=args.levels)
    _emit_report(rep, args)
    if rep.status in ("indeterminate", "divergent"):
        raise _Reported(rep)
    return EXIT_OK


def cmd_verify_representation(args) -> int:
    g, f = _variation_inputs(args)
    _emit_report(verify_representation(g, f, t0=args.t0, levels=args.levels), args)
    return EXIT_OK


def cmd_minkowski_check(args) -> int:
    mu = load_measure(args.measure)
    if not isinstance(mu, PointMeasure):
        raise ValidationError("minkowski-check takes a point measure")
    rep = minkowski_check(mu, center_tol=args.center_tol, dim_tol=args.dim_tol)
    _emit(_json(rep.to_dict()), args.out)
    return EXIT_OK


def _oracle(cfg: dict, dim: int):
    kind = cfg.get("kind")
    if kind == "represented":
        mu = load_measure(cfg["mu"]) if "mu" in cfg else PointMeasure(np.zeros((0, dim)), [], dim=dim)
        nu = load_measure(cfg["nu"]) if "nu" in cfg else SphereMeasure(np.zeros((0, dim)), [], dim=dim)
        F = FunctionalOracle.represented(mu, nu)
    elif kind == "integral":
        F = FunctionalOracle.integral()
    elif kind == "ray_limit":
        F = ray_limit_oracle(cfg["theta"], float(cfg.get("lam", 1e6)))
    elif kind == "first_variation":
        F = FunctionalOracle.first_variation(load_function(cfg["g"], dim=dim), **cfg.get("options", {}))
    else:
        raise ValidationError(f"unknown oracle kind {kind!r}")
    if "scale" in cfg:
        F = F.scaled(float(cfg["scale"]))
    return F


def _config(args) -> dict:
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict) or "oracle" not in cfg:
        raise ValidationError("harness configuration needs an 'oracle' object")
    return cfg


def cmd_decompose(args) -> int:
    cfg = _config(args)
    dim = int(cfg.get("dim", 2))
    F = _oracle(cfg["oracle"], dim)
    probes = cfg.get("probes", "default")
    if probes == "default":
        bodies = default_probes(dim)
    else:
        bodies = [ProbeBody(tuple(map(tuple, p["vertices"])), float(p.get("shift", 0.0))) for p in probes]
    dirs = cfg.get("directions", 16)
    directions = DirectionGrid(dim, dirs).vectors if isinstance(dirs, int) else np.asarray(dirs, dtype=float)
    rep = decompose_functional(F, bodies, tuple(cfg.get("R_sequence", (10.0, 20.0, 40.0))), directions, dim)
    out = rep.to_dict()
    out["nu"] = rep.nu.to_dict()
    _emit(_json(out), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    cfg = _config(args)
    dim = int(cfg.get("dim", 2))
    F = _oracle(cfg["oracle"], dim)
    cases = [AuditCase(load_function(c["f"], dim=dim), load_function(c["g"], dim=dim),
                       float(c.get("alpha", 1.0)), float(c.get("beta", 1.0)))
             for c in cfg.get("cases", [])]
    if not cases:
        raise ValidationError("audit needs at least one case")
    rep = axiom_audit(F, cases, tol=float(cfg.get("tolerance", 1e-9)))
    _emit(_json(rep.to_dict()), args.out)
    return EXIT_OK


class _Reported(Exception):
    """Report already written; exit with the numerical-failure status."""

    def __init__(self, rep):
        super().__init__(f"first variation {rep.status}")
        self.rep = rep


# ------------------------------------------------------------------ parser


def _add_grid(p) -> None:
    p.add_argument("--box", nargs=2, type=float, metavar=("LO", "HI"), help="grid box [LO, HI]^dim")
    p.add_argument("--points", type=int, help="nodes per axis")
    p.add_argument("--dim", type=int, choices=(1, 2), help="dimension for dimension-free specs")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="asplund", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("legendre", help="discrete Legendre transform of a grid function (CSV out)")
    c.add_argument("--phi", required=True)
    _add_grid(c)
    c.add_argument("--dual-box", nargs=2, type=float, metavar=("LO", "HI"))
    c.add_argument("--dual-points", type=int)
    c.set_defaults(run=cmd_legendre)

    c = sub.add_parser("asplund", help="(alpha . f) * (beta . g) tabulated on a grid")
    c.add_argument("--f", required=True)
    c.add_argument("--g", required=True)
    c.add_argument("--alpha", type=float, default=1.0)
    c.add_argument("--beta", type=float, default=1.0)
    _add_grid(c)
    c.set_defaults(run=cmd_asplund)

    c = sub.add_parser("recession", help="recession function per direction (CSV out)")
    c.add_argument("--phi", required=True)
    c.add_argument("--directions", type=int, default=64)
    c.add_argument("--method", choices=("auto", "numeric"), default="auto")
    c.add_argument("--dim", type=int, choices=(1, 2))
    c.set_defaults(run=cmd_recession)

    c = sub.add_parser("pasch-hausdorff", help="k-Lipschitz envelope of phi (spec JSON out)")
    c.add_argument("--phi", required=True)
    c.add_argument("--k", type=float, required=True)
    _add_grid(c)
    c.set_defaults(run=cmd_pasch_hausdorff)

    c = sub.add_parser("moment-measure", help="push-forward of g dx by the gradient of -log g")
    c.add_argument("--g", required=True)
    _add_grid(c)
    c.set_defaults(run=cmd_moment_measure)

    c = sub.add_parser("surface-measure", help="boundary measure of g on its polygonal support")
    c.add_argument("--g", required=True)
    c.add_argument("--panels", type=int, default=16)
    c.add_argument("--dim", type=int, choices=(1, 2))
    c.set_defaults(run=cmd_surface_measure, box=None, points=None)

    for name, run in (("first-variation", cmd_first_variation),
                      ("verify-representation", cmd_verify_representation)):
        c = sub.add_parser(name, help="first variation of the integral at g in direction f")
        c.add_argument("--g", required=True)
        c.add_argument("--f", required=True)
        c.add_argument("--t0", type=float, default=0.1)
        c.add_argument("--levels", type=int, default=6)
        c.add_argument("--table", action="store_true", help="fixed-width table instead of JSON")
        _add_grid(c)
        c.set_defaults(run=run)

    c = sub.add_parser("minkowski-check", help="the three moment-measure conditions for a point measure")
    c.add_argument("--measure", required=True)
    c.add_argument("--center-tol", type=float, default=1e-2)
    c.add_argument("--dim-tol", type=float, default=1e-6)
    c.set_defaults(run=cmd_minkowski_check)

    for name, run in (("decompose", cmd_decompose), ("audit", cmd_audit)):
        c = sub.add_parser(name, help=f"{name} a functional described by a harness configuration")
        c.add_argument("--config", required=True)
        c.set_defaults(run=run)

    for c in sub.choices.values():
        c.add_argument("--out", help="output path (stdout when omitted)")
    return p


def _fail(kind: str, exc: BaseException, code: int, name: str | None = None) -> int:
    name = name or type(exc).__name__
    sys.stderr.write(json.dumps({"error": kind, "type": name, "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.run(args)
    except _Reported as exc:
        name = "DivergenceError" if exc.rep.status == "divergent" else "IndeterminateError"
        return _fail("numerical", exc, EXIT_NUMERICAL, name)
    except ValidationError as exc:
        return _fail("validation", exc, EXIT_VALIDATION)
    except NumericalError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
