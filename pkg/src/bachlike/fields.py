"""Lazily evaluated curvature fields on a batch of chart points.

A :class:`PointContext` owns one batched jet evaluation of the metric (and of
the potential, when the geometry has one).  Tensors are computed on first use
and cached, so identity checks and quadrature integrands can ask for whatever
they need without recomputing shared pieces.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .curvature import (
    CurvatureError,
    bach,
    bach_like,
    curvature_bundle,
    d_tensor,
    hessian_scalar,
    quadratic_tensors,
    soliton_fields,
    weyl_divergence_check,
)
from .geometry import GeometrySpec, metric_at, potential_at
from .jets import Jet
from .tensors import PointTensor, covariant_derivative, jet_einsum, tensor_norm2


class PointContext:
    def __init__(self, geom: GeometrySpec, points, order: int = 5, chart: int = 0):
        self.geom = geom
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.order = order
        self.chart = chart

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.geom.dim

    # ----------------------------------------------------------- tensors
    @cached_property
    def metric(self):
        return metric_at(self.geom, self.points, self.order, self.chart)

    @cached_property
    def bundle(self):
        return curvature_bundle(self.metric)

    @cached_property
    def f(self) -> Jet | None:
        return potential_at(self.geom, self.points, self.order, self.chart)

    @property
    def has_potential(self) -> bool:
        return self.geom.charts[self.chart].f is not None

    @cached_property
    def soliton(self):
        if not self.has_potential:
            raise CurvatureError(f"{self.geom.name} has no potential f")
        return soliton_fields(self.metric, self.bundle, self.f)

    @cached_property
    def quadratic(self):
        return quadratic_tensors(self.metric, self.bundle)

    @property
    def U(self) -> PointTensor:
        return self.quadratic.U

    @property
    def V(self) -> PointTensor:
        return self.quadratic.V

    @cached_property
    def B(self) -> PointTensor:
        mode = "dim4" if self.n == 4 else "general"
        return bach(self.metric, self.bundle, mode)

    @cached_property
    def B_general(self) -> PointTensor:
        return bach(self.metric, self.bundle, "general")

    def bach_like(self, alpha: float, beta: float) -> PointTensor:
        return bach_like(self.U, self.V, alpha, beta)

    @cached_property
    def D(self) -> PointTensor:
        return d_tensor(self.bundle, None, self.soliton.grad_f, self.metric)

    @cached_property
    def cotton_weyl_residual(self) -> PointTensor:
        return weyl_divergence_check(self.bundle)

    @cached_property
    def hess_R(self) -> PointTensor:
        return hessian_scalar(self.bundle.dR, self.metric)

    @cached_property
    def lap_R(self) -> Jet:
        nv = self.metric.nvars
        return Jet(jet_einsum("ij,ij->", self.metric.g_inv.data, self.hess_R.data, nvars=nv), nv)

    def divergence(self, t: PointTensor) -> PointTensor:
        """g^{ab} nabla_a T_{b...} for a covariant tensor."""
        dt = covariant_derivative(t, self.metric)
        nv = self.metric.nvars
        rest = "ijk"[: t.rank - 1]
        data = jet_einsum(f"ab,ab{rest}->{rest}", self.metric.g_inv.data, dt.data, nvars=nv)
        return PointTensor(data, "d" * (t.rank - 1), nv)

    @cached_property
    def scale(self) -> np.ndarray:
        return np.asarray(self.bundle.scale, dtype=float)

    # ------------------------------------------------- base-point scalars
    def _pair(self, t: PointTensor, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...i,...j->...", t.value, u, v)

    @cached_property
    def grad_f(self) -> np.ndarray:
        return self.soliton.grad_f.value

    @cached_property
    def grad_R(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.metric.g_inv.value, self.bundle.dR.value)

    @cached_property
    def f_value(self) -> np.ndarray:
        return np.asarray(self.f.value, dtype=float)

    @cached_property
    def R(self) -> np.ndarray:
        return np.asarray(self.bundle.R.value, dtype=float)

    @cached_property
    def grad_f_norm2(self) -> np.ndarray:
        return np.einsum("...i,...i->...", self.soliton.df.value, self.grad_f)

    @cached_property
    def grad_R_norm2(self) -> np.ndarray:
        return np.einsum("...i,...i->...", self.bundle.dR.value, self.grad_R)

    @cached_property
    def grad_R_dot_grad_f(self) -> np.ndarray:
        return np.einsum("...i,...i->...", self.bundle.dR.value, self.grad_f)

    @cached_property
    def ricci_norm2(self) -> np.ndarray:
        return tensor_norm2(self.bundle.Rc, self.metric)

    @cached_property
    def ricci_ff(self) -> np.ndarray:
        return self._pair(self.bundle.Rc, self.grad_f, self.grad_f)

    @cached_property
    def lap_R_value(self) -> np.ndarray:
        return np.asarray(self.lap_R.value, dtype=float)

    def form_ff(self, t: PointTensor) -> np.ndarray:
        """T(grad f, grad f) for a covariant 2-tensor."""
        return self._pair(t, self.grad_f, self.grad_f)

    @cached_property
    def D_norm2(self) -> np.ndarray:
        return tensor_norm2(self.D, self.metric)

    @cached_property
    def completed_square(self) -> np.ndarray:
        """|grad R - (R/2) grad f|^2."""
        v = self.grad_R - 0.5 * self.R[..., None] * self.grad_f
        return np.einsum("...i,...ij,...j->...", v, self.metric.g.value, v)
