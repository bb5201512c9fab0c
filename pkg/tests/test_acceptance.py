"""Acceptance suite: thirteen end-to-end checks, each under a wall-clock limit.

Every check prints one ``PASS``/``FAIL`` line (measured quantity and time)
to the terminal, outside pytest's capture, then asserts.
"""

import time

import numpy as np
import pytest

from asplund import specs as S
from asplund.conjugate import biconjugate, legendre_transform
from asplund.grid import GridSpec
from asplund.logconcave import LogConcaveFn, asplund_sum, dilate, integral, joint_dual_grid
from asplund.measures import PointMeasure, SphereMeasure, minkowski_check, moment_measure, surface_measure
from asplund.recession import DirectionGrid, numeric_recession, pasch_hausdorff, recession_values, support_body_values
from asplund.riesz_lab import FunctionalOracle, RepresentedFunctional, decompose_functional, monotone_continuity_check
from asplund.variation import essential_continuity_probe, variation_report, verify_representation


def check(capsys, number, title, limit, fn):
    """Run ``fn`` (returning ``(ok, detail)``), print one line, assert tolerance and time."""
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    fast = elapsed < limit
    status = "PASS" if ok and fast else "FAIL"
    with capsys.disabled():
        print(f"\n[{status}] criterion {number:2d}: {title}: {detail} ({elapsed:.2f}s, limit {limit:g}s)")
    assert ok, detail
    assert fast, f"took {elapsed:.2f}s, limit {limit}s"


def box_ind(lo, hi, grid=None):
    return LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon(lo, hi)), grid=grid)


def unit_box_g(n):
    return box_ind((0, 0), (1, 1), GridSpec([-0.5, -0.5], [1.5, 1.5], n))


# ------------------------------------------------------------------ 1


def test_biconjugacy_suite(capsys):
    def run():
        b1, b2 = GridSpec.box(3.0, 241, 1), GridSpec.box(2.0, 65, 2)
        cases = [
            (S.Quadratic(1), b1), (S.NormMultiple(2), b1), (S.RhoA(1.5), b1),
            (S.Huber(1.0, S.Quadratic(1)), b1), (S.IndicatorBall(1.0), b1),
            (S.Quadratic(0.5), b2), (S.NormMultiple(1), b2), (S.SupportOfPolytope(S.regular_polygon(5)), b2),
            (S.Sum((S.Quadratic(1), S.Affine((0.5, -1.0), 0.3))), b2),
            (S.Max((S.NormMultiple(1), S.Affine((1.0, 0.0), -0.5))), b2),
        ]
        worst = 0.0
        for spec, grid in cases:
            phi = S.sample_to_grid(spec, grid)
            back = biconjugate(phi)
            fin = phi.finite_mask
            if not np.array_equal(np.isinf(back.values), ~fin):
                return False, f"{spec!r}: finite sets differ"
            worst = max(worst, float(np.max(np.abs(back.values[fin] - phi.values[fin]))))
        return worst <= 1e-8, f"{len(cases)} specs, max |phi** - phi| = {worst:.2e}"

    check(capsys, 1, "biconjugacy", 5.0, run)


# ------------------------------------------------------------------ 2


def test_norm_conjugate_is_ball_indicator(capsys):
    def run():
        phi = S.sample_to_grid(S.NormMultiple(1), GridSpec.box(8.0, 129, 2))
        D = GridSpec.box(1.5, 61, 2)
        star = legendre_transform(phi, D).values
        inside = np.linalg.norm(D.nodes(), axis=-1) <= 1.0
        worst = float(np.max(star[inside]))
        return worst <= 1e-8, f"max phi* on |y| <= 1: {worst:.2e} over {int(inside.sum())} nodes"

    check(capsys, 2, "Legendre of |x|", 2.0, run)


# ------------------------------------------------------------------ 3


def test_pasch_hausdorff_conjugate_identity(capsys):
    def run():
        R = 12.0
        grid = GridSpec.box(R, int(40 * R) + 1, 1)
        D = GridSpec.box(6.0, 241, 1)
        r = np.abs(D.nodes()[..., 0])
        worst = 0.0
        for k in (1.0, 2.0, 4.0):
            env = S.sample_to_grid(pasch_hausdorff(S.Quadratic(1), k), grid)
            lhs = legendre_transform(env, D).values
            inside = r <= k + 1e-12
            # phi* + indicator of kB: y^2/2 inside; beyond kB the box-R
            # transform R (|y| - k) + k^2/2 renders the +inf of the indicator
            want = np.where(inside, r ** 2 / 2, R * (r - k) + k * k / 2)
            worst = max(worst, float(np.max(np.abs(lhs - want))))
        return worst <= 1e-8, f"k in (1, 2, 4), nodewise error {worst:.2e}"

    check(capsys, 3, "Pasch-Hausdorff conjugate", 2.0, run)


# ------------------------------------------------------------------ 4


def test_support_linearity(capsys):
    def run():
        def on(spec, r, h=1 / 8):
            return LogConcaveFn(spec=spec, grid=GridSpec.box(r, int(round(2 * r / h)) + 1, 2))

        gauss = on(S.Quadratic(1), 2.0)
        square = on(S.IndicatorPolytope(S.box_polygon((-1, -1), (1, 1))), 1.0)
        hexa = on(S.IndicatorPolytope(S.regular_polygon(6)), 1.25)
        cone = on(S.Sum((S.NormMultiple(1), S.IndicatorBall(1.5))), 1.5)
        cases = [(gauss, square, 1.0, 1.0), (square, hexa, 0.5, 2.0), (hexa, cone, 1.5, 1.0),
                 (gauss, cone, 2.0, 0.5), (cone, square, 1.0, 1.0), (gauss, gauss, 1.0, 2.0)]
        worst = 0.0
        for f, g, a, b in cases:
            af, bg = dilate(a, f), dilate(b, g)
            out = asplund_sum(af, bg)
            D = joint_dual_grid([af, bg])
            lhs = legendre_transform(out.phi, D).values
            rhs = a * legendre_transform(f.phi, D).values + b * legendre_transform(g.phi, D).values
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst <= 1e-8, f"6 cases, max |h_sum - (a h_f + b h_g)| = {worst:.2e}"

    check(capsys, 4, "support linearity", 2.0, run)


# ------------------------------------------------------------------ 5


def test_gaussian_first_variation(capsys):
    def run():
        g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(9.0, 257, 2))
        f = LogConcaveFn(spec=S.Quadratic(1), dim=2)
        rep = variation_report(g, f, levels=6)
        err = abs(rep.delta_numeric - 2 * np.pi) / (2 * np.pi)
        return err <= 1e-2, f"delta = {rep.delta_numeric:.5f} vs 2 pi, rel err {err:.1e}"

    check(capsys, 5, "Gaussian first variation", 10.0, run)


# ------------------------------------------------------------------ 6


def test_box_mixed_volume(capsys):
    def run():
        r = verify_representation(unit_box_g(129), box_ind((0, 0), (1, 1)))
        d_ok = abs(r.delta_numeric - 2.0) <= 2e-2 * 2.0
        nu_ok = abs(r.nu_term - 2.0) <= 1e-9
        return d_ok and nu_ok, f"delta = {r.delta_numeric:.6f}, nu-term = {r.nu_term:.12f}"

    check(capsys, 6, "box mixed volume", 10.0, run)


# ------------------------------------------------------------------ 7


def test_mixed_representation(capsys):
    def run():
        want = 4 * np.sqrt(2 * np.pi)
        g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(9.0, 129, 2))
        r = verify_representation(g, box_ind((-1, -1), (1, 1)))
        ok = (abs(r.delta_numeric - want) <= 2e-2 * want and abs(r.mu_term - want) <= 2e-2 * want
              and r.nu_term == 0.0)
        return ok, f"delta = {r.delta_numeric:.4f}, mu-term = {r.mu_term:.4f}, nu-term = {r.nu_term} (want {want:.4f})"

    check(capsys, 7, "mixed representation", 10.0, run)


# ------------------------------------------------------------------ 8


def test_divergence_detection(capsys):
    def run():
        f = LogConcaveFn(spec=S.Quadratic(1), dim=2)
        rep = variation_report(unit_box_g(65), f)
        probe = essential_continuity_probe(box_ind((0, 0), (1, 1)))
        h = support_body_values(f, DirectionGrid(2, 16).vectors)
        ok = rep.status == "divergent" and rep.delta_numeric == np.inf and not probe and np.all(np.isinf(h))
        return ok, f"status {rep.status}, nu_g mass {probe.nu_mass:g}, h_Kf infinite: {bool(np.all(np.isinf(h)))}"

    check(capsys, 8, "divergence detection", 10.0, run)


# ------------------------------------------------------------------ 9


def test_moment_measure_mass(capsys):
    def run():
        gauss = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(7.0, 129, 2))
        square = box_ind((0, 0), (1, 1), GridSpec([-0.5, -0.5], [1.5, 1.5], 257))
        errs = []
        for g, exact in ((gauss, 2 * np.pi), (square, 1.0)):
            errs.append(abs(moment_measure(g).mass - exact) / exact)
        rep = minkowski_check(moment_measure(gauss))
        t = np.linspace(-1, 1, 11)
        line = minkowski_check(PointMeasure(np.stack([t, 2 * t], axis=1), np.ones(11)))
        axes = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        off = minkowski_check(PointMeasure(axes + [0.5, 0.0], np.ones(4)))
        ok = (max(errs) <= 5e-3 and rep.mass_ok and rep.centered_ok and rep.full_dim_ok
              and line.mass_ok and line.centered_ok and not line.full_dim_ok
              and off.mass_ok and not off.centered_ok and off.full_dim_ok)
        return ok, (f"mass errors {errs[0]:.1e} / {errs[1]:.1e}; Gaussian conditions "
                    f"{rep.mass_ok}/{rep.centered_ok}/{rep.full_dim_ok}; line full_dim {line.full_dim_ok}; "
                    f"off-center centered {off.centered_ok}")

    check(capsys, 9, "moment measure", 10.0, run)


# ------------------------------------------------------------------ 10


def test_unit_square_surface_measure(capsys):
    def run():
        nu = surface_measure(box_ind((0, 0), (1, 1)))
        want = {(1, 0), (-1, 0), (0, 1), (0, -1)}
        got = {tuple(int(round(c)) for c in u) for u in nu.directions}
        dev = float(np.max(np.abs(nu.directions - np.round(nu.directions))))
        werr = float(np.max(np.abs(nu.weights - 1.0)))
        ok = got == want and len(nu.weights) == 4 and werr <= 1e-12 and dev <= 1e-12
        return ok, f"{len(nu.weights)} atoms at the axes, max weight error {werr:.1e}"

    check(capsys, 10, "surface measure of the unit square", 1.0, run)


# ------------------------------------------------------------------ 11


def test_decomposition(capsys):
    def run():
        mu = moment_measure(LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(7.0, 65, 2)))
        nu = surface_measure(box_ind((0, 0), (1, 1)))
        rep = decompose_functional(FunctionalOracle.represented(mu, nu), R_sequence=(10.0, 20.0, 40.0))
        errs = []
        for u, w in zip(nu.directions, nu.weights):
            i = int(np.argmin(np.linalg.norm(rep.directions - u, axis=1)))
            errs.append(abs(rep.weights[i] - w) / w)
        zero = decompose_functional(FunctionalOracle.represented(mu, SphereMeasure(np.zeros((0, 2)), [], dim=2)))
        lim = float(np.max(np.abs(zero.limits)))
        return max(errs) <= 5e-2 and lim <= 1e-3, f"weight errors <= {max(errs):.1e}; nu = 0 limits <= {lim:.1e}"

    check(capsys, 11, "decomposition", 30.0, run)


# ------------------------------------------------------------------ 12


def test_monotone_convergence(capsys):
    def run():
        mu = moment_measure(LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(7.0, 65, 2)))
        empty = SphereMeasure(np.zeros((0, 2)), [], dim=2)
        s = np.sqrt(0.5)
        nu = SphereMeasure([[1.0, 0.0], [0.0, 1.0], [-s, -s]], [1.0, 1.0, np.sqrt(2)])
        results = []
        for F, phi in ((RepresentedFunctional(mu, empty), S.Quadratic(1)),
                       (RepresentedFunctional(mu, empty), S.Quadratic(0.25)),
                       (RepresentedFunctional(mu, nu), S.RhoA(2.0))):
            results.append(monotone_continuity_check(F, phi, (1, 2, 4, 8, 16)))
        ok = all(c.pointwise_monotone and c.values_monotone and c.limit_gap <= 1e-2 for c in results)
        return ok, "final gaps " + ", ".join(f"{c.limit_gap:.1e}" for c in results)

    check(capsys, 12, "monotone convergence", 10.0, run)


# ------------------------------------------------------------------ 13


def test_recession_properties(capsys):
    def run():
        rng = np.random.default_rng(13)
        dirs = DirectionGrid(2, 64).vectors
        hexa, tri = S.regular_polygon(6), ((0.0, 0.0), (2.0, 0.0), (0.0, 1.0))
        linear = [S.NormMultiple(1.5), S.RhoA(0.7), S.Huber(1.0, S.Quadratic(1.0)),
                  S.SupportOfPolytope(hexa), S.SupportOfPolytope(tri),
                  S.Sum((S.NormMultiple(1.0), S.Affine((0.3, -0.2), 1.0))),
                  S.Max((S.NormMultiple(1.0), S.Affine((1.5, 0.0), -2.0))),
                  S.ShiftedCone(S.NormMultiple(1.0), 2.0)]
        base = 0.0
        for spec in linear:
            p1, p2 = rng.normal(scale=3.0, size=(2, 2))
            a = numeric_recession(spec, dirs, base_point=p1)
            b = numeric_recession(spec, dirs, base_point=p2)
            base = max(base, float(np.max(np.abs(a - b))))
        maxrule = 0.0
        for f in linear:
            for g in linear[:4] + [S.Quadratic(1)]:
                m = recession_values(S.Max((f, g)), dirs)
                want = np.maximum(recession_values(f, dirs), recession_values(g, dirs))
                if not np.array_equal(np.isinf(m), np.isinf(want)):
                    return False, "max rule: infinite directions differ"
                fin = np.isfinite(want)
                maxrule = max(maxrule, float(np.max(np.abs(m[fin] - want[fin]), initial=0.0)))
        body = 0.0
        for poly in (hexa, tri, S.box_polygon((-1, -2), (3, 1))):
            h = S.SupportOfPolytope(poly)
            body = max(body, float(np.max(np.abs(numeric_recession(h, dirs) - h(dirs)))))
        ok = base <= 1e-6 and maxrule == 0.0 and body <= 1e-9
        return ok, f"base-point spread {base:.1e}, max-rule error {maxrule:.1e}, polygon self-recession {body:.1e}"

    check(capsys, 13, "recession properties", 5.0, run)
