import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bachlike import jets as J
from bachlike.curvature import CurvatureError, bach, christoffel, curvature_bundle, weyl_divergence_check
from bachlike.fields import PointContext
from bachlike.geometry import Chart, GeometrySpec, RandomMetricSpec, metric_at, random_metric, sample_points
from bachlike.jets import JetError
from bachlike.tensors import max_abs, symmetry_residual
from oracles import SymbolicMetric

X = sp.symbols("x0:4")
POINTS = np.array([[0.2, -0.3, 0.4, 0.1], [-0.5, 0.6, 0.1, -0.2]])


def _diag(x, lib):
    return [
        [1 + 0.3 * x[1] * x[1], 0, 0, 0],
        [0, lib.exp(0.2 * x[0] * x[2]), 0, 0],
        [0, 0, 1 + 0.25 * x[3] * x[0], 0],
        [0, 0, 0, 1 / (1 + x[1] * x[1] / 5)],
    ]


def _block(x, lib):
    return [
        [1 + x[2] * x[2] / 5, x[3] / 7, 0, 0],
        [x[3] / 7, 1 + x[0] * x[2] / 4, 0, 0],
        [0, 0, 1 + x[0] * x[0] / 6, 0],
        [0, 0, 0, 1 + x[1] * x[2] / 8],
    ]


class _Sym:
    exp = staticmethod(sp.exp)


def _geometry(builder):
    return GeometrySpec("TEST", 4, (Chart(-np.ones(4), np.ones(4), lambda x: builder(x, J)),))


@pytest.fixture(scope="module", params=["diagonal", "block"])
def case(request):
    builder = {"diagonal": _diag, "block": _block}[request.param]
    sym = SymbolicMetric(sp.Matrix(builder(X, _Sym)), X)
    ctx = PointContext(_geometry(builder), POINTS, 5)
    return [sym.at(p) for p in POINTS], ctx


@pytest.mark.parametrize("name", ["christoffel", "riemann", "ricci", "R", "V", "U"])
def test_against_symbolic_oracle(case, name):
    refs, ctx = case
    b = ctx.bundle
    got = {
        "christoffel": b.metric.christoffel.value,
        "riemann": b.Rm.value,
        "ricci": b.Rc.value,
        "R": ctx.R,
        "V": ctx.V.value,
        "U": ctx.U.value,
    }[name]
    for k, ref in enumerate(refs):
        want = {"christoffel": ref.gamma, "riemann": ref.riemann, "ricci": ref.ricci, "R": ref.R,
                "V": ref.V, "U": ref.U}[name]
        np.testing.assert_allclose(got[k], want, atol=1e-12, rtol=0)


def test_bach_decomposition_on_oracle_metrics(case):
    _, ctx = case
    res = max_abs(ctx.B - (ctx.U * 0.5 + ctx.V * (1 / 6)))
    assert np.all(res <= 1e-12 * ctx.scale)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_riemann_symmetries(seed):
    geom = random_metric(RandomMetricSpec(seed=seed, epsilon=0.1))
    b = curvature_bundle(metric_at(geom, sample_points(geom, 4, seed=seed), 3))
    Rm = b.Rm
    tol = 1e-12 * np.max(b.scale)
    assert np.max(symmetry_residual(Rm, (1, 0, 2, 3), -1.0)) < tol
    assert np.max(symmetry_residual(Rm, (0, 1, 3, 2), -1.0)) < tol
    assert np.max(symmetry_residual(Rm, (2, 3, 0, 1))) < tol
    v = Rm.value
    bianchi = v + np.einsum("...jkil->...ijkl", v) + np.einsum("...kijl->...ijkl", v)
    assert np.max(np.abs(bianchi)) < tol
    assert np.max(symmetry_residual(b.Rc, (1, 0))) < tol


def test_round_sphere_constant_curvature(catalog):
    s4 = catalog["S4"]
    for chart in (0, 1):
        ctx = PointContext(s4, sample_points(s4, 10, seed=1, chart=chart), 4, chart)
        np.testing.assert_allclose(ctx.R, 2.0, atol=1e-9)
        g = ctx.metric.g.value
        np.testing.assert_allclose(ctx.bundle.Rc.value, 0.5 * g, atol=1e-9)


def test_weyl_and_cotton_vanish_on_conformally_flat(catalog):
    s4 = catalog["S4"]
    ctx = PointContext(s4, sample_points(s4, 8, seed=2, chart=1), 4, 1)
    assert np.max(max_abs(ctx.bundle.W_weyl)) < 1e-13
    assert np.max(max_abs(ctx.bundle.C_cotton)) < 1e-13
    assert np.max(max_abs(ctx.B)) < 1e-13


def test_cotton_weyl_relation_dim5(rand5):
    ctx = PointContext(rand5, sample_points(rand5, 6, seed=4), 4)
    res = max_abs(weyl_divergence_check(ctx.bundle))
    assert np.all(res <= 1e-10 * ctx.scale)


def test_bach_modes_agree_in_dim4(rand_ctx):
    b4 = bach(rand_ctx.metric, rand_ctx.bundle, "dim4")
    bg = bach(rand_ctx.metric, rand_ctx.bundle, "general")
    assert np.max(max_abs(b4 - bg)) < 1e-13


def test_order_and_dimension_guards(rand4, rand5):
    pts = sample_points(rand4, 2)
    with pytest.raises(JetError):
        curvature_bundle(metric_at(rand4, pts, 2))
    with pytest.raises(CurvatureError):
        m5 = metric_at(rand5, sample_points(rand5, 2), 4)
        bach(m5, curvature_bundle(m5), "dim4")
    with pytest.raises(CurvatureError):
        m = metric_at(rand4, pts, 4)
        bach(m, curvature_bundle(m), "other")
    with pytest.raises(CurvatureError):
        bad = metric_at(rand4, pts, 2).g.data.copy()
        bad[..., 0, 1, 0] += 1.0
        christoffel(bad, 4)
