"""Curvature tensors of a chart metric, computed on jets.

Conventions (all indices are chart indices, derivative index first):

* ``R_{ijk}^l`` is the mixed Riemann tensor fixed by the commutator
  ``nabla_i nabla_j w_k - nabla_j nabla_i w_k = -R_{ijk}^l w_l``.
* The all-covariant tensor is ``R_{ijkl} = g_{kp} R_{ijl}^p`` so that the
  Ricci tensor is ``R_{jl} = g^{ik} R_{ijkl} = R_{ijl}^i`` and the round
  sphere has positive scalar curvature.  With this placement the Weyl
  tensor below is totally trace-free and ``C = -(n-2)/(n-3) div W``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .jets import Jet, JetError, gradient_coeffs, n_coeffs
from .tensors import (
    MetricAtPoint,
    PointTensor,
    TensorError,
    add_truncated,
    covariant_derivative,
    inverse_metric,
    jet_einsum,
    max_abs,
)


class CurvatureError(ValueError):
    pass


def _require(order: int, needed: int, what: str) -> None:
    if order < needed:
        raise JetError(f"{what} needs metric jets of order >= {needed}, got {order}")


def _check_dim(n: int, what: str) -> None:
    if n <= 3:
        raise CurvatureError(f"{what} is undefined for n = {n} (requires n > 3)")


def stack_components(comps, nvars: int, order: int, batch: tuple[int, ...] = ()) -> np.ndarray:
    """Assemble a nested list of jets / numbers into one coefficient array."""
    n = len(comps)
    orders = [c.order for row in comps for c in row if isinstance(c, Jet)]
    order = min([order] + orders)
    size = n_coeffs(nvars, order)
    out = np.zeros(tuple(batch) + (n, n, size))
    for i, row in enumerate(comps):
        for j, c in enumerate(row):
            if isinstance(c, Jet):
                out[..., i, j, :] = c.coeffs[..., :size]
            else:
                out[..., i, j, 0] = c
    return out


# ---------------------------------------------------------------------------
# operations


def christoffel(g: np.ndarray | PointTensor, nvars: int | None = None) -> MetricAtPoint:
    """Metric bundle with Gamma^k_{ij} = 1/2 g^{kl}(d_i g_jl + d_j g_il - d_l g_ij)."""
    if isinstance(g, PointTensor):
        nvars = g.nvars
        g = g.data
    assert nvars is not None
    gsym = 0.5 * (g + np.swapaxes(g, -2, -3))
    if np.max(np.abs(gsym - g)) > 1e-12 * (1 + np.max(np.abs(g))):
        raise CurvatureError("metric components are not symmetric")
    g_inv = inverse_metric(g, nvars)
    _require(PointTensor(g, "dd", nvars).order, 1, "christoffel")
    dg = np.moveaxis(gradient_coeffs(g, nvars), 0, g.ndim - 3)  # [l, i, j] = d_l g_ij
    d = dg  # d[..., a, b, c, :] = d_a g_bc
    gam1 = 0.5 * (
        np.einsum("...ijlz->...ijlz", d)  # d_i g_jl
        + np.einsum("...jilz->...ijlz", d)  # d_j g_il
        - np.einsum("...lijz->...ijlz", d)  # d_l g_ij
    )
    gam = jet_einsum("kl,ijl->kij", g_inv, gam1, nvars=nvars)
    return MetricAtPoint(
        PointTensor(g, "dd", nvars, "symmetric-pair"),
        PointTensor(g_inv, "uu", nvars, "symmetric-pair"),
        PointTensor(gam, "udd", nvars),
    )


def riemann_mixed(metric: MetricAtPoint) -> PointTensor:
    """R_{ijk}^l = d_i G^l_{jk} - d_j G^l_{ik} + G^p_{jk} G^l_{ip} - G^p_{ik} G^l_{jp}."""
    _require(metric.order, 2, "riemann")
    nv = metric.nvars
    gam = metric.christoffel.data  # [l, j, k]
    nb = gam.ndim - 4
    dgam = np.moveaxis(gradient_coeffs(gam, nv), 0, nb)  # [i, l, j, k]
    t1 = np.einsum("...iljkz->...ijklz", dgam)
    t2 = np.einsum("...jlikz->...ijklz", dgam)
    q1 = jet_einsum("pjk,lip->ijkl", gam, gam, nvars=nv)
    q2 = jet_einsum("pik,ljp->ijkl", gam, gam, nvars=nv)
    data = add_truncated(t1, -t2, q1, -q2, nvars=nv)
    return PointTensor(data, "dddu", nv)


@dataclass(frozen=True)
class CurvatureBundle:
    metric: MetricAtPoint
    Rm_mixed: PointTensor  # R_{ijk}^l
    Rm: PointTensor  # R_{ijkl}
    Rc: PointTensor
    R: Jet
    W_weyl: PointTensor
    C_cotton: PointTensor
    nabla_Rc: PointTensor
    dR: PointTensor

    @property
    def dim(self) -> int:
        return self.metric.dim

    @cached_property
    def Rc_up(self) -> PointTensor:
        g_inv = self.metric.g_inv.data
        return PointTensor(
            jet_einsum("ia,jb,ab->ij", g_inv, g_inv, self.Rc.data, nvars=self.Rc.nvars), "uu", self.Rc.nvars
        )

    @cached_property
    def scale(self):
        """1 + max(|g^-1|_inf^2, |Rm|_inf) per point."""
        return 1.0 + np.maximum(max_abs(self.metric.g_inv) ** 2, max_abs(self.Rm))


def ricci_scalar(Rm_mixed: PointTensor, metric: MetricAtPoint) -> tuple[PointTensor, Jet]:
    nv = metric.nvars
    rc = np.einsum("...ijkiz->...jkz", Rm_mixed.data)
    rc = 0.5 * (rc + np.swapaxes(rc, -2, -3))
    R = jet_einsum("jk,jk->", metric.g_inv.data, rc, nvars=nv)
    return PointTensor(rc, "dd", nv, "symmetric-pair"), Jet(R, nv)


def weyl(Rm: PointTensor, Rc: PointTensor, R: Jet, metric: MetricAtPoint) -> PointTensor:
    n = metric.dim
    _check_dim(n, "Weyl tensor")
    nv = metric.nvars
    g, rc = metric.g.data, Rc.data
    gr = (
        jet_einsum("ik,jl->ijkl", g, rc, nvars=nv)
        - jet_einsum("il,jk->ijkl", g, rc, nvars=nv)
        - jet_einsum("jk,il->ijkl", g, rc, nvars=nv)
        + jet_einsum("jl,ik->ijkl", g, rc, nvars=nv)
    )
    gg = jet_einsum("ik,jl->ijkl", g, g, nvars=nv) - jet_einsum("il,jk->ijkl", g, g, nvars=nv)
    rgg = jet_einsum(",ijkl->ijkl", R.coeffs, gg, nvars=nv)
    data = add_truncated(Rm.data, -gr / (n - 2), rgg / ((n - 1) * (n - 2)), nvars=nv)
    return PointTensor(data, "dddd", nv, "riemann-type")


def cotton(nabla_Rc: PointTensor, dR: PointTensor, metric: MetricAtPoint) -> PointTensor:
    """C_{ijk} = nabla_i R_jk - nabla_j R_ik - (g_jk nabla_i R - g_ik nabla_j R) / (2(n-1))."""
    n = metric.dim
    nv = metric.nvars
    d = nabla_Rc.data
    g = metric.g.data
    corr = jet_einsum("jk,i->ijk", g, dR.data, nvars=nv) - jet_einsum("ik,j->ijk", g, dR.data, nvars=nv)
    data = add_truncated(d, -np.swapaxes(d, -3, -4), -corr / (2 * (n - 1)), nvars=nv)
    return PointTensor(data, "ddd", nv)


def curvature_bundle(metric: MetricAtPoint, dim: int | None = None) -> CurvatureBundle:
    n = metric.dim if dim is None else dim
    if n != metric.dim:
        raise CurvatureError(f"dimension {n} does not match metric dimension {metric.dim}")
    _check_dim(n, "Weyl/Cotton")
    _require(metric.order, 3, "curvature bundle")
    nv = metric.nvars
    Rm_mixed = riemann_mixed(metric)
    Rm = PointTensor(
        jet_einsum("kp,ijlp->ijkl", metric.g.data, Rm_mixed.data, nvars=nv), "dddd", nv, "riemann-type"
    )
    Rc, R = ricci_scalar(Rm_mixed, metric)
    nabla_Rc = covariant_derivative(Rc, metric)
    dR = PointTensor(np.moveaxis(gradient_coeffs(R.coeffs, nv), 0, R.coeffs.ndim - 1), "d", nv)
    W = weyl(Rm, Rc, R, metric)
    C = cotton(nabla_Rc, dR, metric)
    return CurvatureBundle(metric, Rm_mixed, Rm, Rc, R, W, C, nabla_Rc, dR)


def weyl_divergence(bundle: CurvatureBundle) -> PointTensor:
    """div W with the derivative contracted into the last Weyl slot: g^{lb} nabla_b W_{ijkl}."""
    m = bundle.metric
    _require(m.order, 4, "Weyl divergence")
    dW = covariant_derivative(bundle.W_weyl, m)
    return PointTensor(jet_einsum("bl,bijkl->ijk", m.g_inv.data, dW.data, nvars=m.nvars), "ddd", m.nvars)


def weyl_divergence_check(bundle: CurvatureBundle, metric: MetricAtPoint | None = None, n: int | None = None):
    """Residual tensor C_{ijk} + (n-2)/(n-3) nabla^l W_{ijkl}."""
    n = bundle.dim if n is None else n
    _check_dim(n, "Cotton-Weyl relation")
    divW = weyl_divergence(bundle)
    return bundle.C_cotton + divW * ((n - 2) / (n - 3))


def bach(metric: MetricAtPoint, bundle: CurvatureBundle, mode: str = "dim4") -> PointTensor:
    n = metric.dim
    if mode == "dim4":
        if n != 4:
            raise CurvatureError(f"4-dimensional Bach tensor requested with n = {n}")
        c1, c2 = 1.0, 0.5
    elif mode == "general":
        _check_dim(n, "Bach tensor")
        c1, c2 = 1.0 / (n - 3), 1.0 / (n - 2)
    else:
        raise CurvatureError(f"unknown Bach mode {mode!r}")
    _require(metric.order, 4, "Bach tensor")
    nv = metric.nvars
    gi = metric.g_inv.data
    dW = covariant_derivative(bundle.W_weyl, metric)  # [b, i, k, j, l]
    E = PointTensor(jet_einsum("bl,bikjl->ikj", gi, dW.data, nvars=nv), "ddd", nv)
    dE = covariant_derivative(E, metric)  # [a, i, k, j]
    t1 = jet_einsum("ak,aikj->ij", gi, dE.data, nvars=nv)
    t2 = jet_einsum("kl,ikjl->ij", bundle.Rc_up.data, bundle.W_weyl.data, nvars=nv)
    data = add_truncated(c1 * t1, c2 * t2, nvars=nv)
    return PointTensor(data, "dd", nv)


@dataclass(frozen=True)
class QuadraticTensors:
    U: PointTensor
    V: PointTensor
    W_quad: PointTensor
    U4: PointTensor | None  # 4-d form, when n = 4


def _lap_rc(metric: MetricAtPoint, bundle: CurvatureBundle) -> PointTensor:
    nn = covariant_derivative(bundle.nabla_Rc, metric)
    return PointTensor(
        jet_einsum("kl,klij->ij", metric.g_inv.data, nn.data, nvars=metric.nvars), "dd", metric.nvars
    )


def hessian_scalar(df: PointTensor, metric: MetricAtPoint) -> PointTensor:
    """nabla_i nabla_j of a scalar given its differential."""
    h = covariant_derivative(df, metric)
    return h.with_data(0.5 * (h.data + np.swapaxes(h.data, -2, -3)), symmetry="symmetric-pair")


def quadratic_tensors(metric: MetricAtPoint, bundle: CurvatureBundle, n: int | None = None) -> QuadraticTensors:
    n = metric.dim if n is None else n
    _require(metric.order, 4, "U/V tensors")
    nv = metric.nvars
    g, gi = metric.g.data, metric.g_inv.data
    Rc, R = bundle.Rc.data, bundle.R.coeffs
    Rc_up = bundle.Rc_up.data
    Rm = bundle.Rm.data
    lap_rc = _lap_rc(metric, bundle).data
    hessR = hessian_scalar(bundle.dR, metric).data
    lapR = jet_einsum("ij,ij->", gi, hessR, nvars=nv)
    rc2 = jet_einsum("ij,ij->", Rc, Rc_up, nvars=nv)
    R2 = jet_einsum(",->", R, R, nvars=nv)
    RmRc = jet_einsum("ipjq,pq->ij", Rm, Rc_up, nvars=nv)
    RRc = jet_einsum(",ij->ij", R, Rc, nvars=nv)

    def sg(s):  # scalar jet times g
        return jet_einsum(",ij->ij", s, g, nvars=nv)

    c = n - 3
    U = add_truncated(
        2 * c * RmRc, c * lap_rc, -0.5 * c * sg(rc2), -c * RRc, -0.5 * c * sg(lapR), 0.25 * c * sg(R2), nvars=nv
    )
    V = add_truncated(-hessR, sg(lapR), RRc, -0.25 * sg(R2), nvars=nv)

    Rm_up3 = jet_einsum("pa,qb,rc,iabc->ipqr", gi, gi, gi, Rm, nvars=nv)
    rm2 = jet_einsum("ipqr,ipqr->", Rm_up3, jet_einsum("ia,abcd->ibcd", gi, Rm, nvars=nv), nvars=nv)
    RmRm = jet_einsum("ipqr,jpqr->ij", Rm_up3, Rm, nvars=nv)
    RcRc = jet_einsum("pi,pq,qj->ij", Rc, gi, Rc, nvars=nv)
    Wq = add_truncated(RmRm, -0.25 * sg(rm2), -2 * RmRc, RRc, -2 * RcRc, sg(rc2), -0.25 * sg(R2), nvars=nv)

    U4 = None
    if n == 4:
        U4 = add_truncated(2 * RmRc, lap_rc, -0.5 * sg(rc2), -RRc, -0.5 * sg(lapR), 0.25 * sg(R2), nvars=nv)
        U4 = PointTensor(_sym(U4), "dd", nv)
    return QuadraticTensors(
        PointTensor(_sym(U), "dd", nv), PointTensor(_sym(V), "dd", nv), PointTensor(Wq, "dd", nv), U4
    )


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -2, -3))


def bach_like(U: PointTensor, V: PointTensor, alpha: float, beta: float) -> PointTensor:
    """alpha U + beta V."""
    return U * alpha + V * beta


def d_tensor(bundle: CurvatureBundle, W_weyl: PointTensor | None, grad_f: PointTensor | None,
             metric: MetricAtPoint | None = None) -> PointTensor:
    """D_{ijk} = C_{ijk} + W_{ijkl} nabla^l f."""
    if grad_f is None:
        raise CurvatureError("D-tensor needs a potential f")
    W = bundle.W_weyl if W_weyl is None else W_weyl
    nv = W.nvars
    if grad_f.variance != "u":
        raise TensorError("grad_f must be contravariant")
    data = add_truncated(bundle.C_cotton.data, jet_einsum("ijkl,l->ijk", W.data, grad_f.data, nvars=nv), nvars=nv)
    return PointTensor(data, "ddd", nv)


@dataclass(frozen=True)
class SolitonFields:
    f: Jet
    df: PointTensor
    grad_f: PointTensor
    hess_f: PointTensor
    laplacian_f: Jet
    soliton_residual: PointTensor
    normalization_residual: Jet
    laplacian_residual: Jet  # Delta f - (2 - R)
    grad_R_residual: PointTensor  # nabla R - 2 Rc(grad f)


def soliton_fields(metric: MetricAtPoint, bundle: CurvatureBundle, f: Jet | None) -> SolitonFields:
    if f is None:
        raise CurvatureError("soliton fields need a potential f")
    _require(f.order, 2, "soliton fields")
    nv = metric.nvars
    df = PointTensor(np.moveaxis(gradient_coeffs(f.coeffs, nv), 0, f.coeffs.ndim - 1), "d", nv)
    grad_f = PointTensor(jet_einsum("ij,j->i", metric.g_inv.data, df.data, nvars=nv), "u", nv)
    hess = hessian_scalar(df, metric)
    lap = Jet(jet_einsum("ij,ij->", metric.g_inv.data, hess.data, nvars=nv), nv)
    sol = add_truncated(hess.data, bundle.Rc.data, -0.5 * metric.g.data, nvars=nv)
    grad2 = Jet(jet_einsum("i,i->", df.data, grad_f.data, nvars=nv), nv)
    norm = bundle.R + grad2 - f
    lap_res = lap - (2.0 - bundle.R)
    rc_gf = jet_einsum("ij,j->i", bundle.Rc.data, grad_f.data, nvars=nv)
    grad_res = add_truncated(bundle.dR.data, -2.0 * rc_gf, nvars=nv)
    return SolitonFields(
        f, df, grad_f, hess, lap, PointTensor(sol, "dd", nv, "symmetric-pair"), norm, lap_res,
        PointTensor(grad_res, "d", nv),
    )
