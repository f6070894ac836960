"""Registry of pointwise identities, evaluated on batches of chart points.

Every entry maps a :class:`PointContext` to one non-negative residual per
point, already divided by the relevant scale.  Inequalities (``I-CS``) report
the amount by which the inequality is violated, so zero means satisfied.

Id prefixes: ``P-`` holds on every metric, ``I-`` is a named identity or
inequality, ``S-`` needs the soliton equation, ``T-`` is a conditional
statement (hypothesis then conclusion) and ``C-`` is a value check tied to one
catalog geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curvature import weyl_divergence_check
from .fields import PointContext
from .geometry import GeometrySpec, sample_points
from .jets import Jet, gradient_coeffs
from .report import FAIL, NOT_APPLICABLE, PASS, SKIPPED, IdentityReport
from .tensors import PointTensor, covariant_derivative, jet_einsum, max_abs, symmetry_residual, trace

SOLITON_GATE = 1e-8
EINSTEIN_GATE = 1e-9


class IdentityError(KeyError):
    pass


# ---------------------------------------------------------------------------
# helpers


def _tr(ctx: PointContext, t: PointTensor) -> np.ndarray:
    return np.asarray(trace(t, ctx.metric).value, dtype=float)


def _rel(ctx: PointContext, residual) -> np.ndarray:
    return np.asarray(residual, dtype=float) / ctx.scale


def _grad(j: Jet) -> PointTensor:
    nv = j.n
    return PointTensor(np.moveaxis(gradient_coeffs(j.coeffs, nv), 0, j.coeffs.ndim - 1), "d", nv)


def _laplacian(ctx: PointContext, j: Jet) -> np.ndarray:
    h = covariant_derivative(_grad(j), ctx.metric)
    return np.einsum("...ij,...ij->...", ctx.metric.g_inv.value, h.value)


def _vec_scale(ctx: PointContext, *terms) -> np.ndarray:
    """Scale for identities whose terms involve f: point scale plus the largest term."""
    mags = [np.abs(np.asarray(t, dtype=float)) for t in terms]
    return ctx.scale + np.max(np.stack(mags), axis=0)


# ---------------------------------------------------------------------------
# residual functions


def _bach_decomp(c, p):
    return _rel(c, max_abs(c.B - (c.U * 0.5 + c.V * (1.0 / 6.0))))


def _trace_v(c, p):
    return _rel(c, np.abs(_tr(c, c.V) - 3.0 * c.lap_R_value))


def _trace_u(c, p):
    return _rel(c, np.abs(_tr(c, c.U) + c.lap_R_value))


def _trace_b(c, p):
    return _rel(c, np.abs(_tr(c, c.B)))


def _trace_bl(c, p):
    a, b = p["alpha"], p["beta"]
    return _rel(c, np.abs(_tr(c, c.bach_like(a, b)) - (3.0 * b - a) * c.lap_R_value))


def _w_quad(c, p):
    return _rel(c, max_abs(c.quadratic.W_quad))


def _u_dim4(c, p):
    return _rel(c, max_abs(c.U - c.quadratic.U4))


def _bach_modes(c, p):
    return _rel(c, max_abs(c.B - c.B_general))


def _bach_line(c, p):
    a = p["alpha"]
    return _rel(c, max_abs(c.bach_like(a, a / 3.0) - c.B * (2.0 * a)))


def _bl_decomp(c, p):
    a, b = p["alpha"], p["beta"]
    return _rel(c, max_abs(c.bach_like(a, b) - (c.B * (2.0 * a) + c.V * (b - a / 3.0))))


def _cotton_weyl(c, p):
    return _rel(c, max_abs(weyl_divergence_check(c.bundle)))


def _weyl_tracefree(c, p):
    W, m = c.bundle.W_weyl, c.metric
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    return _rel(c, np.max(np.stack([max_abs(trace(W, m, a, b)) for a, b in pairs]), axis=0))


def _riemann_sym(c, p):
    Rm = c.bundle.Rm
    res = [symmetry_residual(Rm, (1, 0, 2, 3), -1.0), symmetry_residual(Rm, (0, 1, 3, 2), -1.0),
           symmetry_residual(Rm, (2, 3, 0, 1))]
    bianchi = Rm.value + np.einsum("...ijkl->...jkil", Rm.value) + np.einsum("...ijkl->...kijl", Rm.value)
    res.append(max_abs(bianchi, 4))
    return _rel(c, np.max(np.stack(res), axis=0))


def _cotton_sym(c, p):
    C, m = c.bundle.C_cotton, c.metric
    res = [symmetry_residual(C, (1, 0, 2), -1.0), max_abs(trace(C, m, 1, 2)), max_abs(trace(C, m, 0, 2))]
    return _rel(c, np.max(np.stack(res), axis=0))


def _metric_compat(c, p):
    return _rel(c, max_abs(covariant_derivative(c.metric.g, c.metric)))


def _div(name):
    def fn(c, p):
        return _rel(c, max_abs(c.divergence(getattr(c, name))))
    return fn


def _cauchy_schwarz(c, p):
    slack = 4.0 * c.ricci_norm2 - c.R**2
    return _rel(c, np.maximum(-slack, 0.0))


def _bochner(c, p):
    """1/2 Delta|grad f|^2 = <grad Delta f, grad f> + |Hess f|^2 + Rc(grad f, grad f)."""
    s = c.soliton
    nv = c.metric.nvars
    grad2 = Jet(jet_einsum("i,i->", s.df.data, s.grad_f.data, nvars=nv), nv)
    lhs = 0.5 * _laplacian(c, grad2)
    d_lap = np.einsum("...i,...i->...", _grad(s.laplacian_f).value, c.grad_f)
    hess2 = np.einsum("...ij,...ia,...jb,...ab->...", s.hess_f.value, c.metric.g_inv.value,
                      c.metric.g_inv.value, s.hess_f.value)
    rhs = d_lap + hess2 + c.ricci_ff
    return np.abs(lhs - rhs) / _vec_scale(c, lhs, d_lap, hess2, c.ricci_ff)


def _bochner_soliton(c, p):
    """On a soliton |Hess f|^2 = |g/2 - Rc|^2 = n/4 - R + |Rc|^2."""
    s = c.soliton
    gi = c.metric.g_inv.value
    hess2 = np.einsum("...ij,...ia,...jb,...ab->...", s.hess_f.value, gi, gi, s.hess_f.value)
    return _rel(c, np.abs(hess2 - (c.n / 4.0 - c.R + c.ricci_norm2)))


def _grad_cubic(c, p):
    """(nabla_k R_ij) f^k f^i f^j = 1/2 Hess R(grad f, grad f) - 1/2 Rc(grad f, grad f) + 1/4 |grad R|^2."""
    gf = c.grad_f
    lhs = np.einsum("...kij,...k,...i,...j->...", c.bundle.nabla_Rc.value, gf, gf, gf)
    rhs = 0.5 * c.form_ff(c.hess_R) - 0.5 * c.ricci_ff + 0.25 * c.grad_R_norm2
    return np.abs(lhs - rhs) / _vec_scale(c, lhs, rhs)


def _soliton_eq(c, p):
    return _rel(c, max_abs(c.soliton.soliton_residual))


def _normalization(c, p):
    return _rel(c, np.abs(c.soliton.normalization_residual.value))


def _laplacian_f(c, p):
    return _rel(c, np.abs(c.soliton.laplacian_residual.value))


def _grad_r(c, p):
    return _rel(c, max_abs(c.soliton.grad_R_residual))


def _d_antisym(c, p):
    return _rel(c, symmetry_residual(c.D, (1, 0, 2), -1.0))


def _einstein_defect(c) -> np.ndarray:
    traceless = c.bundle.Rc.value - (c.R / c.n)[..., None, None] * c.metric.g.value
    return np.abs(traceless).reshape(traceless.shape[:-2] + (-1,)).max(axis=-1) / c.scale


def _flat_defect(c) -> np.ndarray:
    return max_abs(c.bundle.Rm) / c.scale


def _einstein_u(c, p):
    return _rel(c, max_abs(c.U))


def _einstein_v(c, p):
    return _rel(c, max_abs(c.V))


def _static_einstein_defect(c) -> np.ndarray:
    return np.maximum(_einstein_defect(c), c.grad_f_norm2 / c.scale)


def _einstein_r2(c, p):
    return np.abs(c.R - 2.0)


def _s4_r(c, p):
    return np.abs(c.R - 2.0)


def _s4_uvb(c, p):
    return np.max(np.stack([max_abs(c.U), max_abs(c.V), max_abs(c.B)]), axis=0)


def _cyl_v(c, p):
    """V = diag(3/16 g_sphere, -9/16) in the (angles, t) chart."""
    expected = (3.0 / 16.0) * c.metric.g.value.copy()
    expected[..., 3, :] = 0.0
    expected[..., :, 3] = 0.0
    expected[..., 3, 3] = -9.0 / 16.0
    return max_abs(c.V.value - expected, 2)


def _cyl_u(c, p):
    return max_abs(c.U + c.V * (1.0 / 3.0))


def _cyl_bd(c, p):
    return np.maximum(max_abs(c.B), max_abs(c.D))


def _gauss_flat(c, p):
    parts = [max_abs(c.bundle.Rm), max_abs(c.bundle.W_weyl), max_abs(c.bundle.C_cotton), max_abs(c.U),
             max_abs(c.V), max_abs(c.B), max_abs(c.D)]
    return np.max(np.stack(parts), axis=0)


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class PointwiseIdentity:
    id: str
    anchor: str
    order: int  # jet order the residual consumes
    fn: Callable[[PointContext, dict], np.ndarray]
    tol: float = 1e-9
    needs_f: bool = False
    needs_soliton: bool = False
    dims: tuple[int, ...] | None = (4,)
    geometry: str | None = None  # catalog-bound value checks
    hypothesis: Callable[[PointContext], np.ndarray] | None = None  # per-point defect, gated at EINSTEIN_GATE
    hypothesis_name: str = ""


IDENTITIES: dict[str, PointwiseIdentity] = {}


def _reg(*args, **kw) -> None:
    ident = PointwiseIdentity(*args, **kw)
    IDENTITIES[ident.id] = ident


_reg("P-BACH-DECOMP", "B = 1/2 U + 1/6 V in dimension 4", 4, _bach_decomp)
_reg("P-TRACE-V", "tr V = 3 Delta R", 4, _trace_v)
_reg("P-TRACE-U", "tr U = -Delta R", 4, _trace_u)
_reg("P-TRACE-B", "tr B = 0", 4, _trace_b)
_reg("P-TRACE-BL", "tr(alpha U + beta V) = (3 beta - alpha) Delta R", 4, _trace_bl)
_reg("P-WQUAD", "quadratic W_ij vanishes in dimension 4", 4, _w_quad)
_reg("P-U-DIM4", "general-n U at n = 4 equals the 4-dimensional U", 4, _u_dim4)
_reg("P-BACH-MODES", "general-n Bach tensor reduces to the 4-dimensional one", 4, _bach_modes)
_reg("P-BACH-LINE", "alpha U + (alpha/3) V = 2 alpha B", 4, _bach_line)
_reg("P-BL-DECOMP", "alpha U + beta V = 2 alpha B + (beta - alpha/3) V", 4, _bl_decomp)
_reg("P-COTTON-WEYL", "C_ijk + (n-2)/(n-3) nabla^l W_ijkl = 0", 4, _cotton_weyl, dims=(4, 5, 6))
_reg("P-WEYL-TRACEFREE", "every trace of W vanishes", 2, _weyl_tracefree, tol=1e-10, dims=(4, 5, 6))
_reg("P-RIEMANN-SYM", "R_ijkl = -R_jikl = -R_ijlk = R_klij, first Bianchi", 2, _riemann_sym, tol=1e-10,
     dims=None)
_reg("P-COTTON-SYM", "C_ijk = -C_jik and both traces of C vanish", 3, _cotton_sym, tol=1e-10, dims=(3, 4, 5, 6))
_reg("P-METRIC-COMPAT", "nabla g = 0", 1, _metric_compat, tol=1e-11, dims=None)
_reg("P-DIV-U", "div U = 0", 5, _div("U"), tol=1e-8)
_reg("P-DIV-V", "div V = 0", 5, _div("V"), tol=1e-8)
_reg("P-DIV-B", "div B = 0", 5, _div("B"), tol=1e-8)
_reg("I-CS", "R^2 - 4|Rc|^2 <= 0", 2, _cauchy_schwarz, tol=1e-10)
_reg("I-BOCHNER", "1/2 Delta|grad f|^2 = <grad Delta f, grad f> + |Hess f|^2 + Rc(grad f, grad f)", 4,
     _bochner, tol=1e-10, needs_f=True, dims=None)
_reg("I-BOCHNER-SOLITON", "|Hess f|^2 = |g/2 - Rc|^2 = 1 - R + |Rc|^2", 2, _bochner_soliton, tol=1e-10,
     needs_f=True, needs_soliton=True)
_reg("I-GRADCUBIC", "(nabla_k R_ij) f^k f^i f^j = 1/2 Hess R(grad f, grad f) - 1/2 Rc(grad f, grad f) "
     "+ 1/4 |grad R|^2", 4, _grad_cubic, tol=1e-10, needs_f=True, needs_soliton=True)
_reg("S-SOLITON", "Hess f + Rc = g/2", 2, _soliton_eq, tol=1e-10, needs_f=True, dims=None)
_reg("S-NORMALIZATION", "R + |grad f|^2 = f", 2, _normalization, tol=1e-10, needs_f=True, dims=None)
_reg("S-LAPLACIAN", "Delta f = 2 - R", 2, _laplacian_f, tol=1e-10, needs_f=True, needs_soliton=True)
_reg("S-GRAD-R", "grad R = 2 Rc(grad f)", 3, _grad_r, tol=1e-10, needs_f=True, needs_soliton=True)
_reg("S-D-ANTISYM", "D_ijk = -D_jik", 3, _d_antisym, tol=1e-10, needs_f=True)
_reg("T-EINSTEIN-U", "Einstein implies U = 0", 4, _einstein_u, hypothesis=_einstein_defect,
     hypothesis_name="Rc = (R/4) g")
_reg("T-EINSTEIN-V", "Einstein implies V = 0", 4, _einstein_v, hypothesis=_einstein_defect,
     hypothesis_name="Rc = (R/4) g")
_reg("T-EINSTEIN-R2", "Einstein shrinking soliton with constant f has R = 2", 2, _einstein_r2, tol=1e-10,
     needs_f=True, needs_soliton=True, hypothesis=_static_einstein_defect,
     hypothesis_name="Rc = (R/4) g and grad f = 0")
_reg("T-GAUSS-V", "flat soliton (Gaussian) has V = 0", 4, _einstein_v, needs_f=True, needs_soliton=True,
     hypothesis=_flat_defect, hypothesis_name="Rm = 0")
_reg("C-S4-R", "round S^4 of radius sqrt 6 has R = 2", 2, _s4_r, tol=1e-10, geometry="S4")
_reg("C-S4-UVB", "U = V = B = 0 on the round S^4", 4, _s4_uvb, geometry="S4")
_reg("C-CYL-V", "V = (3/16) g on the S^3 block and V_tt = -9/16 on S^3(2) x R", 4, _cyl_v, geometry="CYL")
_reg("C-CYL-U", "U = -V/3 on S^3(2) x R", 4, _cyl_u, geometry="CYL")
_reg("C-CYL-BD", "B = 0 and D = 0 on S^3(2) x R", 4, _cyl_bd, geometry="CYL")
_reg("C-GAUSS-FLAT", "every curvature tensor vanishes on the Gaussian soliton", 4, _gauss_flat, tol=1e-12,
     geometry="GAUSS")

SUITES: dict[str, tuple[str, ...]] = {
    "pointwise-all": tuple(k for k, v in IDENTITIES.items() if not v.needs_f and v.geometry is None
                           and v.hypothesis is None),
    "soliton-all": tuple(k for k, v in IDENTITIES.items() if v.needs_f or v.hypothesis is not None
                         or k.startswith("C-")) + ("P-BACH-DECOMP", "I-CS"),
    "catalog": tuple(k for k in IDENTITIES if k.startswith("C-")),
}


def required_order(ids) -> int:
    return max((IDENTITIES[i].order for i in ids if i in IDENTITIES), default=0)


def get_identity(identity_id: str) -> PointwiseIdentity:
    key = identity_id.upper()
    if key not in IDENTITIES:
        raise IdentityError(f"unknown identity id {identity_id!r}")
    return IDENTITIES[key]


def pointwise_identity(identity_id: str, ctx: PointContext, alpha: float = 1.0, beta: float = 1.0) -> np.ndarray:
    """Per-point residual (or violation for inequalities) of one identity."""
    ident = get_identity(identity_id)
    if ctx.order < ident.order:
        raise IdentityError(f"{ident.id} needs jet order {ident.order}, context has {ctx.order}")
    return np.asarray(ident.fn(ctx, {"alpha": alpha, "beta": beta}), dtype=float)


def check_identity(identity_id: str, geom: GeometrySpec, count: int = 50, seed: int = 0, order: int = 5,
                   alpha: float = 1.0, beta: float = 1.0, tol: float | None = None,
                   points=None, chart: int | None = None, ctx: PointContext | None = None) -> IdentityReport:
    """Checks one identity at ``count`` sampled points.

    A prepared ``ctx`` is reused as is (suites share one per geometry).
    ``chart=None`` picks the geometry's preferred chart for pointwise work
    (the stereographic chart on S4 and CYL, where angle charts lose digits
    near the poles).
    """
    ident = get_identity(identity_id)
    chart = geom.params.get("pointwise_chart", 0) if chart is None else chart
    tol = ident.tol if tol is None else tol

    def report(samples, residual, verdict):
        return IdentityReport(ident.id, ident.anchor, geom.name, samples, residual, tol, verdict)

    if ident.geometry is not None and ident.geometry != geom.name:
        return report(0, 0.0, NOT_APPLICABLE)
    if ident.dims is not None and geom.dim not in ident.dims:
        return report(0, 0.0, NOT_APPLICABLE)
    if ident.needs_f and not geom.has_potential:
        return report(0, 0.0, SKIPPED)
    if order < ident.order:
        raise IdentityError(f"{ident.id} needs jet order {ident.order}, got {order}")
    if not 0 <= chart < len(geom.charts):
        return report(0, 0.0, NOT_APPLICABLE)
    if ctx is None:
        pts = sample_points(geom, count, seed, chart) if points is None else np.atleast_2d(points)
        ctx = PointContext(geom, pts, order, chart)
    elif ctx.order < ident.order:
        raise IdentityError(f"{ident.id} needs jet order {ident.order}, context has {ctx.order}")
    if ident.needs_soliton:
        sol = np.maximum(_soliton_eq(ctx, {}), _normalization(ctx, {}))
        if float(sol.max()) > SOLITON_GATE:
            return report(len(ctx), 0.0, SKIPPED)
    if ident.hypothesis is not None and float(ident.hypothesis(ctx).max()) > EINSTEIN_GATE:
        return report(len(ctx), 0.0, SKIPPED)
    res = pointwise_identity(ident.id, ctx, alpha, beta)
    worst = float(res.max())
    return report(len(ctx), worst, PASS if worst <= tol else FAIL)
