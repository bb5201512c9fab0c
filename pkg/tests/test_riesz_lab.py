import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asplund import specs as S
from asplund.errors import ValidationError
from asplund.grid import GridSpec
from asplund.logconcave import LogConcaveFn
from asplund.measures import PointMeasure, SphereMeasure, moment_measure, surface_measure
from asplund.riesz_lab import (
    AuditCase,
    DecompositionReport,
    FunctionalOracle,
    ProbeBody,
    RepresentedFunctional,
    axiom_audit,
    decompose_functional,
    default_probes,
    degenerate_identity_witness,
    monotone_continuity_check,
    probe_function,
    ray_limit_oracle,
)

AXES = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
EMPTY_NU = SphereMeasure(np.zeros((0, 2)), np.zeros(0), dim=2)
SQUARE = S.box_polygon((0, 0), (1, 1))


@pytest.fixture(scope="module")
def gauss_mu():
    g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(7.0, 65, 2))
    return moment_measure(g)


@pytest.fixture(scope="module")
def square_nu():
    return surface_measure(LogConcaveFn(spec=S.IndicatorPolytope(SQUARE)))


def lc(spec, dim=2):
    return LogConcaveFn(spec=spec, dim=dim)


def cases_2d():
    gauss = lc(S.Quadratic(1))
    sq = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((-1, -1), (1, 1))))
    hexa = LogConcaveFn(spec=S.IndicatorPolytope(S.regular_polygon(6)))
    return [AuditCase(gauss, gauss, 1, 1), AuditCase(gauss, sq, 2, 0.5), AuditCase(sq, hexa, 0.5, 1.5),
            AuditCase(hexa, gauss, 1, 2)]


# ------------------------------------------------------- represented functional


def test_origin_indicator_is_zero(gauss_mu, square_nu):
    F = RepresentedFunctional(gauss_mu, square_nu)
    assert F(LogConcaveFn(spec=S.IndicatorPolytope(((0.0, 0.0),)))) == 0.0


def test_finite_on_super_coercive_with_compact_mu(gauss_mu):
    F = RepresentedFunctional(gauss_mu, EMPTY_NU)
    for spec in (S.Quadratic(1), S.Quadratic(3), S.IndicatorBall(2.0), S.IndicatorPolytope(S.regular_polygon(5))):
        assert np.isfinite(F(lc(spec)))


def test_gaussian_nu_term_diverges(square_nu, gauss_mu):
    F = RepresentedFunctional(gauss_mu, square_nu)
    assert F(lc(S.Quadratic(1))) == np.inf


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        RepresentedFunctional(PointMeasure([[0.0]], [1.0]), EMPTY_NU)


def test_scaled_functional(gauss_mu, square_nu):
    F = RepresentedFunctional(gauss_mu, square_nu)
    f = LogConcaveFn(spec=S.IndicatorPolytope(S.regular_polygon(6)))
    assert F.scaled(2.0)(f) == pytest.approx(2 * F(f), rel=1e-12)
    assert json.dumps(F.to_dict())


@settings(max_examples=30)
@given(st.integers(0, 2 ** 31 - 1))
def test_represented_monotone(seed):
    # nested bodies and domination of support functions give ordered values
    rng = np.random.default_rng(seed)
    mu = PointMeasure(rng.normal(size=(8, 2)), rng.uniform(0.1, 1, size=8))
    theta = rng.uniform(0, 2 * np.pi, size=5)
    nu = SphereMeasure(np.stack([np.cos(theta), np.sin(theta)], axis=1), rng.uniform(0.1, 1, size=5))
    F = RepresentedFunctional(mu, nu)
    r1 = rng.uniform(0.2, 1.0)
    r2 = r1 + rng.uniform(0, 1.0)
    small = LogConcaveFn(spec=S.IndicatorPolytope(S.regular_polygon(7, r1)))
    large = LogConcaveFn(spec=S.IndicatorPolytope(S.regular_polygon(7, r2)))
    assert F(small) <= F(large)


# ------------------------------------------------------------------ axiom audit


def test_audit_represented_exact(gauss_mu, square_nu):
    F = FunctionalOracle.represented(gauss_mu, EMPTY_NU)
    rep = axiom_audit(F, cases_2d())
    assert rep.max_residual <= 1e-8
    assert rep.monotonicity_violations == []
    rep = axiom_audit(RepresentedFunctional(PointMeasure(AXES, np.ones(4)), square_nu),
                      cases_2d()[2:3])
    assert rep.max_residual <= 1e-8


def test_audit_integral_not_linear(frozen):
    g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec([-10.0], [10.0], 641))
    rep = axiom_audit(FunctionalOracle.integral(), [AuditCase(g, g, 1, 1)])
    ref = frozen["integral_nonlinearity_1d"]
    assert rep.lhs[0] == pytest.approx(ref["lhs"], rel=1e-3)
    assert rep.rhs[0] == pytest.approx(ref["rhs"], rel=1e-3)
    assert rep.max_residual > 0.2


def test_audit_first_variation_gaussian():
    g = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(9.0, 97, 2))
    f1 = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(3.0, 49, 2))
    f2 = LogConcaveFn(spec=S.Quadratic(0.5), grid=GridSpec.box(4.0, 65, 2))
    rep = axiom_audit(FunctionalOracle.first_variation(g), [AuditCase(f1, f2, 1.0, 0.5)])
    assert rep.max_residual <= 2e-2


def test_audit_flags_monotonicity():
    # a decreasing functional: larger functions get smaller values
    F = FunctionalOracle(lambda f: -float(f.support_at(np.array([[1.0, 0.0]]))[0]), "negated")
    sq = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((-1, -1), (1, 1))))
    rep = axiom_audit(F, [(sq, sq, 1.0, 1.0)])
    assert rep.monotonicity_violations == [0]
    assert rep.to_dict()["monotonicity_violations"] == [0]


def test_audit_accepts_plain_callable():
    sq = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((-1, -1), (1, 1))))
    rep = axiom_audit(lambda f: 0.0, [(sq, sq)])
    assert rep.max_residual == 0.0
    with pytest.raises(ValidationError):
        axiom_audit(3.0, [(sq, sq)])


# --------------------------------------------------------- degenerate identity


def test_identity_norm_at_e1():
    w = degenerate_identity_witness(S.NormMultiple(1), (1.0, 0.0), GridSpec.box(2.0, 17, 2))
    assert w.residual == 0.0


def test_identity_off_node_point():
    w = degenerate_identity_witness(S.Quadratic(1), (0.3, -0.7), GridSpec.box(2.0, 9, 2))
    assert w.residual == 0.0


def test_identity_constant():
    w = degenerate_identity_witness(S.Constant(5.0), (0.5, 0.5), GridSpec.box(1.0, 5, 2))
    assert w.residual == 0.0


def test_sandwich_holds():
    w = degenerate_identity_witness(S.NormMultiple(1), (1.0, 0.0), GridSpec.box(2.0, 33, 2), r=0.5)
    assert w.sandwich_ok
    assert w.sandwich_eps == pytest.approx(0.5)
    assert json.dumps(w.to_dict())


def test_identity_rejects_infinite_point():
    with pytest.raises(ValidationError):
        degenerate_identity_witness(S.IndicatorBall(1.0), (2.0, 0.0), GridSpec.box(3.0, 9, 2))
    with pytest.raises(ValidationError):
        degenerate_identity_witness(S.NormMultiple(1), (1.0,), GridSpec.box(3.0, 9, 2))


# ---------------------------------------------------------------- decomposition


def test_probe_function_support():
    f = probe_function(S.SupportOfPolytope(SQUARE), 10.0)
    y = np.array([[20.0, 0.0], [3.0, 3.0]])
    np.testing.assert_allclose(f.support_at(y), [10.0, 0.0])


def test_default_probes_cover_directions():
    probes = default_probes()
    assert any(not p.contains_origin() for p in probes)
    assert all(p.contains_origin() or p.shift > 0 for p in probes)
    assert len(default_probes(1)) == 4


def test_probe_needs_origin_or_shift():
    with pytest.raises(ValidationError):
        decompose_functional(lambda f: 0.0, bodies=[S.box_polygon((1, 1), (2, 2))])


def test_decompose_square_nu(gauss_mu, square_nu):
    F = FunctionalOracle.represented(gauss_mu, square_nu)
    rep = decompose_functional(F)
    w = rep.weights
    for d in AXES:
        i = int(np.argmin(np.linalg.norm(rep.directions - d, axis=1)))
        assert w[i] == pytest.approx(1.0, rel=5e-2)
    assert np.sum(w) == pytest.approx(4.0, rel=5e-2)
    assert rep.residual <= 1e-3


def test_decompose_nu_zero(gauss_mu):
    rep = decompose_functional(FunctionalOracle.represented(gauss_mu, EMPTY_NU))
    assert np.max(np.abs(rep.limits)) <= 1e-3
    assert len(rep.nu) == 0 or rep.nu.mass <= 1e-3


@pytest.mark.parametrize("c", [0.5, 2.0])
def test_decompose_scale_equivariant(gauss_mu, square_nu, c):
    F = FunctionalOracle.represented(gauss_mu, square_nu)
    base = decompose_functional(F).weights
    scaled = decompose_functional(F.scaled(c)).weights
    np.testing.assert_allclose(scaled, c * base, atol=5e-2 * c)


def test_decompose_distinguishes_measures(gauss_mu):
    # uniqueness: a weight gap on one normal shows up in the probe limits
    nu1 = SphereMeasure(AXES, [1.0, 1.0, 1.0, 1.0])
    nu2 = SphereMeasure(AXES, [1.5, 1.0, 1.0, 1.0])
    bodies = [ProbeBody(S.regular_polygon(4, 1.0, phase=np.pi / 4))]
    a = decompose_functional(RepresentedFunctional(gauss_mu, nu1), bodies=bodies, directions=AXES)
    b = decompose_functional(RepresentedFunctional(gauss_mu, nu2), bodies=bodies, directions=AXES)
    hmin = float(np.min(bodies[0].support(AXES)))
    assert abs(b.limits[0] - a.limits[0]) >= 0.5 * hmin - 1e-3


def test_decompose_first_variation_of_square():
    g = LogConcaveFn(spec=S.IndicatorPolytope(SQUARE), grid=GridSpec([-0.25, -0.25], [1.25, 1.25], 25))
    F = FunctionalOracle.first_variation(g)
    bodies = [S.box_polygon((-1, -1), (1, 1)), S.box_polygon((-1, -1), (2, 1)),
              S.box_polygon((-2, -1), (1, 1)), S.box_polygon((-1, -1), (1, 3))]
    rep = decompose_functional(F, bodies=bodies, directions=AXES, R_sequence=(10.0, 20.0, 40.0))
    np.testing.assert_allclose(rep.weights, 1.0, rtol=5e-2)


def test_decompose_diverging_probe():
    with pytest.raises(ValidationError):
        decompose_functional(lambda f: np.inf, bodies=[S.box_polygon((-1, -1), (1, 1))])


def test_decomposition_report_json(gauss_mu, square_nu):
    rep = decompose_functional(FunctionalOracle.represented(gauss_mu, square_nu),
                               bodies=[S.box_polygon((-1, -1), (1, 1))], directions=AXES)
    data = json.loads(rep.to_json())
    assert data["R_sequence"] == [10.0, 20.0, 40.0]
    assert isinstance(rep, DecompositionReport)


# ---------------------------------------------------------- monotone continuity


def test_continuity_represented(gauss_mu, square_nu):
    F = RepresentedFunctional(gauss_mu, EMPTY_NU)
    chk = monotone_continuity_check(F, S.Quadratic(1), (1, 2, 4, 8, 16))
    assert chk.pointwise_monotone and chk.values_monotone
    assert chk.limit_gap <= 1e-2


def test_continuity_nu_term_grows():
    nu = SphereMeasure(AXES, np.ones(4))
    F = RepresentedFunctional(PointMeasure(np.zeros((0, 2)), np.zeros(0), dim=2), nu)
    chk = monotone_continuity_check(F, S.Quadratic(1), (1, 2, 4, 8))
    # the nu-term is the sum of the capped recession slopes k
    np.testing.assert_allclose(chk.values, [4.0, 8.0, 16.0, 32.0], rtol=1e-9)
    assert chk.limit_value == np.inf
    assert chk.values_monotone


def test_continuity_broken_oracle_flagged():
    chk = monotone_continuity_check(ray_limit_oracle((1.0, 0.0)), S.Quadratic(1), (1, 2, 4, 8, 16))
    assert chk.values_monotone
    assert chk.limit_gap > 0.1
    assert json.dumps(chk.to_dict())
