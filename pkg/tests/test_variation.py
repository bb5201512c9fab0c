import json

import numpy as np
import pytest

from asplund import specs as S
from asplund.errors import IndeterminateError, TruncationError, ValidationError
from asplund.grid import ConvexGridFunction, GridSpec
from asplund.logconcave import LogConcaveFn, asplund_sum, dilate
from asplund.variation import (
    VariationReport,
    essential_continuity_probe,
    first_variation,
    sum_integral,
    variation_report,
    verify_representation,
)


def gaussian_g(n=129, r=9.0):
    return LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(r, n, 2))


def box_g(lo=(0, 0), hi=(1, 1), n=65):
    grid = GridSpec([a - 0.5 for a in lo], [b + 0.5 for b in hi], n)
    return LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon(lo, hi)), grid=grid)


def box_f(lo=(0, 0), hi=(1, 1)):
    return LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon(lo, hi)))


GAUSS_F = LogConcaveFn(spec=S.Quadratic(1), dim=2)
ORIGIN = LogConcaveFn(spec=S.IndicatorPolytope(((0.0, 0.0),)))


@pytest.fixture(scope="module")
def gauss_gauss():
    return verify_representation(gaussian_g(), GAUSS_F)


@pytest.fixture(scope="module")
def box_gauss():
    return variation_report(box_g(), GAUSS_F)


# ------------------------------------------------------------------ examples


def test_gaussian_first_variation(frozen, gauss_gauss):
    assert gauss_gauss.delta_numeric == pytest.approx(frozen["gaussian_first_variation"], rel=1e-3)


@pytest.mark.parametrize("dims", ["1,1,1,1", "2,1,1,3"])
def test_rectangle_first_variation(frozen, dims):
    a, b, c, d = map(float, dims.split(","))
    delta = first_variation(box_g(hi=(a, b)), box_f(hi=(c, d)))
    assert delta == pytest.approx(frozen["rectangle_first_variation"][dims], rel=1e-9)


def test_box_gaussian_divergent(frozen, box_gauss):
    assert box_gauss.status == "divergent"
    assert box_gauss.delta_numeric == np.inf
    ref = frozen["box_gaussian_quotients"]
    np.testing.assert_allclose(box_gauss.t_sequence, ref["t"], rtol=1e-12)
    np.testing.assert_allclose(box_gauss.quotients, ref["q"], rtol=1e-3)


def test_first_variation_divergent_returns_inf():
    assert first_variation(box_g(), GAUSS_F) == np.inf


def test_gaussian_representation(frozen, gauss_gauss):
    r = gauss_gauss
    assert r.mu_term == pytest.approx(frozen["gaussian_first_moment"], rel=1e-2)
    assert r.nu_term == 0.0 and r.nu_valid
    assert r.relative_gap <= 1e-2 and r.consistent


def test_box_representation():
    r = verify_representation(box_g(), box_f())
    assert r.delta_numeric == pytest.approx(2.0, rel=1e-9)
    assert r.mu_term == 0.0
    assert abs(r.nu_term - 2.0) <= 1e-9
    assert r.relative_gap <= 1e-9


def test_mixed_representation(frozen):
    want = frozen["gaussian_abs_moment"]
    r = verify_representation(gaussian_g(), box_f((-1, -1), (1, 1)))
    assert r.delta_numeric == pytest.approx(want, rel=2e-2)
    assert r.mu_term == pytest.approx(want, rel=2e-2)
    assert r.nu_term == 0.0


def test_divergent_representation_structure(box_gauss):
    r = verify_representation(box_g(), GAUSS_F)
    assert r.delta_numeric == np.inf and r.nu_term == np.inf
    assert r.representation_total == np.inf
    assert r.relative_gap is None


# ---------------------------------------------------------------- essential continuity


def test_probe_gaussian():
    rep = essential_continuity_probe(LogConcaveFn(spec=S.Quadratic(1), dim=2))
    assert rep and rep.nu_mass == 0.0


def test_probe_square():
    rep = essential_continuity_probe(LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon())))
    assert not rep and rep.nu_mass == pytest.approx(4.0, abs=1e-12)


def test_probe_vanishing_radial_density():
    rep = essential_continuity_probe(LogConcaveFn(spec=S.RadialBarrier(1.0, 0.5), dim=2))
    assert rep.essentially_continuous and rep.nu_mass <= 1e-12


def test_probe_indicator_ball_not_continuous():
    rep = essential_continuity_probe(LogConcaveFn(spec=S.IndicatorBall(1.0), dim=2))
    assert not rep and rep.nu_mass == pytest.approx(2 * np.pi)


def test_probe_needs_spec():
    g = GridSpec.box(1.0, 5, 2)
    with pytest.raises(ValidationError):
        essential_continuity_probe(LogConcaveFn(phi=ConvexGridFunction(g, np.zeros((5, 5)))))


# ------------------------------------------------------------------ errors


def test_parameter_validation():
    with pytest.raises(ValidationError):
        first_variation(gaussian_g(), GAUSS_F, t0=0.0)
    with pytest.raises(ValidationError):
        first_variation(gaussian_g(), GAUSS_F, levels=0)
    with pytest.raises(ValidationError):
        first_variation(gaussian_g(), LogConcaveFn(spec=S.Quadratic(1), dim=1))


def test_zero_mass_g_rejected():
    grid = GridSpec.box(1.0, 9, 2)
    vals = np.full((9, 9), np.inf)
    vals[4, 4] = 0.0
    with pytest.raises(ValidationError):
        first_variation(LogConcaveFn(phi=ConvexGridFunction(grid, vals)), box_f())


def test_truncated_g_box_rejected():
    with pytest.raises(TruncationError):
        first_variation(gaussian_g(r=3.0, n=65), GAUSS_F)


def test_indeterminate_raises():
    # a single level cannot trip the detector, and three levels of a
    # quotient sequence that neither settles nor blows up are indeterminate
    from asplund import variation as V

    assert V._detect([0.1, 0.05, 0.025, 0.0125], [1.0, 2.0, 1.0, 2.0]) == "indeterminate"
    assert V._detect([0.1], [1.0]) == "converged"
    with pytest.raises(IndeterminateError):
        orig = V._detect
        V._detect = lambda t, q: "indeterminate"
        try:
            first_variation(box_g(), box_f())
        finally:
            V._detect = orig


# ------------------------------------------------------------------ report


def test_report_json_roundtrip(gauss_gauss, box_gauss):
    for r in (gauss_gauss, box_gauss):
        text = r.to_json()
        data = json.loads(text)
        back = VariationReport.from_dict(data)
        assert back.status == r.status
        assert back.delta_numeric == r.delta_numeric
        np.testing.assert_allclose(back.quotients, r.quotients)


def test_report_total_is_sum(gauss_gauss):
    r = gauss_gauss
    assert r.representation_total == r.mu_term + r.nu_term


def test_report_table(box_gauss):
    text = box_gauss.table()
    assert "+inf" in text and "divergent" in text
    assert len(text.splitlines()) >= len(box_gauss.t_sequence)


def test_report_detector_logged(box_gauss):
    assert box_gauss.detector == {"growth_factor": 2.0, "halvings": 3, "min_exponent": 0.3}


# ---------------------------------------------------------------- properties


def test_linearity_in_f_slot():
    g = gaussian_g()
    f1 = LogConcaveFn(spec=S.Quadratic(1), grid=GridSpec.box(3.0, 49, 2))
    f2 = LogConcaveFn(spec=S.IndicatorPolytope(S.box_polygon((-1, -1), (1, 1))), grid=GridSpec.box(1.0, 33, 2))
    for a, b in ((0.5, 2.0), (1.0, 1.0)):
        lhs = first_variation(g, asplund_sum(dilate(a, f1), dilate(b, f2)))
        rhs = a * first_variation(g, f1) + b * first_variation(g, f2)
        assert lhs == pytest.approx(rhs, rel=2e-2)


@pytest.mark.parametrize("small,large", [
    (box_f((-0.5, -0.5), (0.5, 0.5)), box_f((-1, -1), (1, 1))),
    (LogConcaveFn(spec=S.Sum((S.NormMultiple(1.0), S.IndicatorPolytope(S.regular_polygon(6)))),
                  grid=GridSpec.box(1.25, 41, 2)),
     LogConcaveFn(spec=S.IndicatorPolytope(S.regular_polygon(6)))),
    (ORIGIN, box_f((-1, -1), (1, 1))),
])
def test_monotone_in_f(small, large):
    g = gaussian_g()
    assert first_variation(g, small) <= first_variation(g, large) + 1e-9


@pytest.mark.parametrize("g", [gaussian_g(), box_g()])
def test_identity_contributes_nothing(g):
    assert abs(first_variation(g, ORIGIN)) <= 1e-6


@pytest.mark.parametrize("f", [box_f((-1, -1), (1, 1)), GAUSS_F, box_f((0, 0), (1, 2))])
def test_integral_nondecreasing_in_t(f):
    g = gaussian_g(n=97)
    ts = [0.0, 0.0125, 0.025, 0.05, 0.1]
    vals = [sum_integral(g, f, t)[0] for t in ts]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_box_sum_integral_exact():
    for t in (0.1, 0.05, 0.025):
        I, psi = sum_integral(box_g(), box_f(), t)
        assert I == pytest.approx((1 + t) ** 2, rel=1e-12)
