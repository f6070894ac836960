import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bachlike.fields import PointContext
from bachlike.geometry import (
    CATALOG_NAMES,
    GeometryError,
    RandomMetricSpec,
    catalog_get,
    metric_values,
    random_metric,
    resolve_geometry,
    sample_points,
)
from oracles import SymbolicMetric


def test_catalog_shapes(catalog):
    assert set(catalog) == set(CATALOG_NAMES)
    assert catalog["S4"].closed and not catalog["CYL"].closed
    assert not catalog["E4"].has_potential
    assert len(catalog["S4"].charts) == 2 and len(catalog["CYL"].charts) == 2
    with pytest.raises(GeometryError):
        catalog_get("T4")


@pytest.mark.parametrize("name,chart", [("GAUSS", 0), ("S4", 0), ("S4", 1), ("CYL", 0), ("CYL", 1)])
def test_catalog_solitons(catalog, name, chart):
    geom = catalog[name]
    ctx = PointContext(geom, sample_points(geom, 10, seed=3, chart=chart), 3, chart)
    sol = ctx.soliton
    # angle charts lose a few digits near their poles; the tolerance here is loose on purpose
    tol = 1e-12 if chart == 1 or name == "GAUSS" else 1e-7
    assert np.max(np.abs(sol.soliton_residual.value)) < tol
    assert np.max(np.abs(sol.normalization_residual.value)) < tol


def _away_from_poles(geom, pts, gap=0.3):
    """Angle-chart points whose polar angles stay ``gap`` away from 0 and pi."""
    polar = pts[:, : (3 if geom.name == "S4" else 2)]
    return pts[np.all((polar > gap) & (polar < np.pi - gap), axis=1)]


@pytest.mark.parametrize("name,R,rc2", [("S4", 2.0, 1.0), ("CYL", 1.5, 0.75)])
def test_invariants_agree_across_charts(catalog, name, R, rc2):
    geom = catalog[name]
    for chart, tol in ((0, 1e-7), (1, 1e-12)):
        pts = sample_points(geom, 20, seed=5, chart=chart)
        if chart == 0:
            pts = _away_from_poles(geom, pts)
        ctx = PointContext(geom, pts, 4, chart)
        np.testing.assert_allclose(ctx.R, R, atol=tol)
        np.testing.assert_allclose(ctx.ricci_norm2, rc2, atol=tol)
        np.testing.assert_allclose(ctx.lap_R_value, 0.0, atol=tol)


def test_angle_chart_loses_digits_near_poles(catalog):
    """Why pointwise checks run in the stereographic chart."""
    geom = catalog["S4"]
    near = np.array([[0.01, 1.0, 1.0, 1.0], [1.0, 3.13, 1.0, 1.0]])
    angle = PointContext(geom, near, 4, 0)
    stereo = PointContext(geom, sample_points(geom, 20, seed=5, chart=1), 4, 1)
    assert np.max(np.abs(stereo.lap_R_value)) < 1e-12
    assert np.max(np.abs(angle.lap_R_value)) > 1e3 * np.max(np.abs(stereo.lap_R_value))


def test_cylinder_values_from_symbolic_oracle(catalog):
    """Stereographic chart of S^3(2) x R: V = 3/16 g on the sphere block, V_tt = -9/16."""
    y = sp.symbols("y0:4")
    s = 1 + y[0] ** 2 + y[1] ** 2 + y[2] ** 2
    c = 16 / s**2
    g = sp.diag(c, c, c, 1)
    f = y[3] ** 2 / 4 + sp.Rational(3, 2)
    oracle = SymbolicMetric(g, y, f)
    geom = catalog["CYL"]
    pts = sample_points(geom, 2, seed=8, chart=1)
    ctx = PointContext(geom, pts, 4, 1)
    for k, p in enumerate(pts):
        ref = oracle.at(p)
        assert ref.R == pytest.approx(1.5, abs=1e-12)
        np.testing.assert_allclose(ref.soliton_residual, 0.0, atol=1e-12)
        np.testing.assert_allclose(ref.V[:3, :3], 3 / 16 * ref.g[:3, :3], atol=1e-12)
        assert ref.V[3, 3] == pytest.approx(-9 / 16, abs=1e-12)
        np.testing.assert_allclose(ctx.V.value[k], ref.V, atol=1e-10)
        np.testing.assert_allclose(ctx.U.value[k], ref.U, atol=1e-10)
        np.testing.assert_allclose(ref.U, -ref.V / 3, atol=1e-12)


@settings(max_examples=25)
@given(st.integers(0, 2**20), st.sampled_from([4, 5]), st.floats(0.005, 0.05))
def test_random_metrics_are_positive_definite(seed, dim, eps):
    geom = random_metric(RandomMetricSpec(seed=seed, dim=dim, epsilon=eps))
    g = metric_values(geom, sample_points(geom, 64, seed=seed))
    np.testing.assert_allclose(g, np.swapaxes(g, -1, -2), atol=0)
    assert np.linalg.eigvalsh(g).min() > 0


def test_random_metric_is_seeded():
    a = random_metric(RandomMetricSpec(seed=11))
    b = random_metric(RandomMetricSpec(seed=11))
    c = random_metric(RandomMetricSpec(seed=12))
    pts = sample_points(a, 5, seed=0)
    np.testing.assert_array_equal(metric_values(a, pts), metric_values(b, pts))
    assert not np.allclose(metric_values(a, pts), metric_values(c, pts))


def test_random_metric_is_near_flat():
    geom = random_metric(RandomMetricSpec(seed=3, epsilon=0.05))
    g = metric_values(geom, sample_points(geom, 50, seed=1))
    assert np.max(np.abs(g - np.eye(4))) < 0.05 * 40


def test_sample_points_inside_shrunk_box(catalog):
    for geom in catalog.values():
        for chart in range(len(geom.charts)):
            c = geom.charts[chart]
            pts = sample_points(geom, 200, seed=1, chart=chart)
            assert np.all(pts >= c.lower + geom.margin) and np.all(pts <= c.upper - geom.margin)
    np.testing.assert_array_equal(sample_points(catalog["CYL"], 4, 9), sample_points(catalog["CYL"], 4, 9))
    with pytest.raises(GeometryError):
        sample_points(catalog["CYL"], 0)


def test_resolve_geometry():
    assert resolve_geometry("rand5", seed=1).dim == 5
    assert resolve_geometry("GAUSS").name == "GAUSS"
