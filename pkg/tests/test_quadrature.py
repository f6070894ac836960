import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bachlike.geometry import RandomMetricSpec, catalog_get, random_metric
from bachlike.quadrature import (
    Integrand,
    QuadratureError,
    check_regular,
    gauss_legendre,
    integrate_boundary,
    integrate_manifold,
    integrate_region,
    make_region,
    random_vector_fields,
    stokes_terms,
)

PI2 = math.pi**2
ONE = Integrand(lambda p: np.ones(len(p)), needs_context=False)


def gauss_weighted_volume(r):
    """int over |x| <= 2 sqrt(r) of exp(-|x|^2/4) in R^4."""
    return 16 * PI2 * (1 - (1 + r) * math.exp(-r))


def cyl_weighted_volume(half):
    return 16 * PI2 * math.exp(-1.5) * 2 * math.sqrt(math.pi) * math.erf(half / 2)


def test_gauss_legendre_is_exact_for_polynomials():
    x, w = gauss_legendre(5, -1.0, 3.0)
    assert np.sum(w * x**9) == pytest.approx((3.0**10 - 1.0) / 10, rel=1e-13)


def test_closed_form_volumes(catalog):
    g = make_region(catalog["GAUSS"], 4.0, 24)
    assert integrate_region(g, ONE).value == pytest.approx(PI2 / 2 * 4.0**4, rel=1e-12)
    assert integrate_boundary(g, ONE).value == pytest.approx(2 * PI2 * 4.0**3, rel=1e-12)
    assert integrate_region(g, ONE, weighted=True).value == pytest.approx(gauss_weighted_volume(4.0), rel=1e-12)

    c = make_region(catalog["CYL"], 5.0, 24)
    half = 2 * math.sqrt(3.5)
    assert integrate_region(c, ONE).value == pytest.approx(16 * PI2 * 2 * half, rel=1e-12)
    assert integrate_boundary(c, ONE).value == pytest.approx(2 * 16 * PI2, rel=1e-12)
    assert integrate_region(c, ONE, weighted=True).value == pytest.approx(cyl_weighted_volume(half), rel=1e-12)

    s = make_region(catalog["S4"], None, 24)
    assert integrate_region(s, ONE).value == pytest.approx(8 * PI2 / 3 * 36, rel=1e-12)
    assert integrate_boundary(s, ONE).value == 0.0


@settings(max_examples=8)
@given(st.floats(1.0, 30.0))
def test_weighted_volume_any_level(r):
    reg = make_region(catalog_get("GAUSS"), r, 16)
    res = integrate_region(reg, ONE, weighted=True)
    exact = gauss_weighted_volume(r)
    assert res.value == pytest.approx(exact, rel=1e-10)
    # the reported refinement never understates the actual error by much
    assert abs(res.value - exact) <= max(res.refinement, 1e-12 * exact)


def test_long_slabs_are_split_into_panels(catalog):
    reg = make_region(catalog["CYL"], 37.5, 24)
    assert len(reg.volume) == 6
    half = 2 * math.sqrt(36.0)
    assert integrate_region(reg, ONE, weighted=True).value == pytest.approx(cyl_weighted_volume(half), rel=1e-12)


def test_refinement_shrinks_with_q(catalog):
    reg = make_region(catalog["GAUSS"], 4.0, 24)
    fn = Integrand(lambda p: np.cos(p[:, 0]) * np.exp(p[:, 1] / 3), invariant=False, needs_context=False)
    errs = [integrate_region(reg, fn, q=q).refinement for q in (8, 16, 24)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("name,r", [("GAUSS", 4.0), ("CYL", 5.0)])
def test_dedup_matches_full_evaluation(catalog, name, r):
    """Invariant integrands evaluated once per orbit equal the node-by-node sum."""
    reg = make_region(catalog[name], r, 4)

    def fn(c):
        return np.stack([c.R**2 * c.grad_f_norm2 + c.f_value, c.form_ff(c.V)], -1)

    fast = integrate_region(reg, Integrand(fn, order=4), weighted=True)
    slow = integrate_region(reg, Integrand(fn, order=4, invariant=False), weighted=True)
    # node-by-node values in the angle chart carry ~1e-11 relative pole roundoff
    np.testing.assert_allclose(fast.value, slow.value, rtol=1e-9)


def test_stokes_for_gradient_of_f(catalog):
    geom = catalog["GAUSS"]
    reg = make_region(geom, 4.0, 24)

    def grad_f(x):
        return [xi / 2 for xi in x]

    t = stokes_terms(reg, grad_f)
    vol, area, rho = PI2 / 2 * 4.0**4, 2 * PI2 * 4.0**3, 4.0
    assert t.interior.value == pytest.approx(2 * vol, rel=1e-12)
    assert t.flux.value == pytest.approx(rho / 2 * area, rel=1e-12)


@pytest.mark.parametrize("name,r", [("GAUSS", 4.0), ("CYL", 5.0)])
def test_stokes_random_fields(catalog, name, r):
    geom = catalog[name]
    reg = make_region(geom, r, 16)
    t = stokes_terms(reg, random_vector_fields(geom, 4, seed=2))
    assert np.max(t.relative) < 1e-6


@pytest.mark.parametrize("name,r", [("GAUSS", 4.0), ("CYL", 5.0)])
def test_stokes_residual_drops_under_doubling(catalog, name, r):
    """Strictly decreasing until the rounding floor."""
    geom = catalog[name]
    X = random_vector_fields(geom, 4, seed=2)
    res = [float(np.max(stokes_terms(make_region(geom, r, q), X).relative)) for q in (2, 4, 8, 16)]
    for a, b in zip(res, res[1:]):
        assert b < a or max(a, b) < 1e-13


def test_manifold_limits(catalog):
    g = integrate_manifold(catalog["GAUSS"], ONE, weighted=True)
    assert g.result.value == pytest.approx(16 * PI2, rel=1e-9)
    assert g.tail < 1e-8
    c = integrate_manifold(catalog["CYL"], ONE, weighted=True)
    assert c.result.value == pytest.approx(cyl_weighted_volume(math.inf), rel=1e-9)
    s = integrate_manifold(catalog["S4"], ONE, weighted=False)
    assert s.r is None and s.tail == 0.0


def test_region_errors(catalog):
    with pytest.raises(QuadratureError):
        make_region(catalog["GAUSS"], 0.0)
    with pytest.raises(QuadratureError):
        make_region(catalog["GAUSS"], 40.0)
    with pytest.raises(QuadratureError):
        make_region(catalog["CYL"], 1.5)
    with pytest.raises(QuadratureError):
        make_region(catalog["E4"], 3.0)
    with pytest.raises(QuadratureError):
        make_region(catalog["GAUSS"], None)
    with pytest.raises(QuadratureError):
        integrate_manifold(catalog["E4"], ONE)
    assert check_regular(make_region(catalog["GAUSS"], 4.0, 8)) == pytest.approx(2.0)


def test_indicator_regions_are_flagged():
    geom = random_metric(RandomMetricSpec(seed=2, with_f=True))
    reg = make_region(geom, 0.0, 6)
    res = integrate_region(reg, ONE)
    assert res.low_accuracy
    with pytest.raises(QuadratureError):
        integrate_boundary(reg, ONE)
