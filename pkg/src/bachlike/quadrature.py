"""Gauss-Legendre integration over sublevel sets {f <= r} and their boundaries.

Each region is described by parameter patches: a box in parameter space, a
map into chart coordinates, and (for catalog geometries) the axis along which
invariant integrands can vary.  Volume weights are |det dphi| sqrt(det g);
boundary weights use the induced metric dphi^T g dphi.  Jacobians come from
order-1 jets of the parameter map, so new patches need only the map itself.

Integrands built from curvature invariants are constant along the symmetry
orbits of the catalog geometries (spheres of constant radius for GAUSS, the
S^3 fibres for CYL, everything for S4).  For those, the integrand is evaluated
once per node of the non-trivial axis and broadcast; the metric weights are
still computed at every node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import jets as J
from .fields import PointContext
from .geometry import (
    GeometrySpec,
    Polynomial,
    coordinate_jets,
    random_polynomial_field,
)
from .geometry import metric_at, metric_values, potential_at, potential_values
from .jets import Jet

DEFAULT_Q = 24
CHUNK = 16384
CONTEXT_CHUNK = 256
REGULAR_MIN_GRAD = 1e-6
PANEL_WIDTH = 4.0  # max extent of one panel along the orbit axis

MEASURES = ("dV", "e^{-f}dV", "dS", "e^{-f}dS")


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class IntegralResult:
    """``value`` is a float, or an array for integrands with trailing component axes."""

    value: float
    refinement: float
    q: int
    measure: str
    low_accuracy: bool = False


@dataclass(frozen=True)
class Integrand:
    """A scalar integrand.

    ``fn`` receives a :class:`PointContext` (or, with ``needs_context=False``,
    the raw ``(N, n)`` chart points) and returns one value per point.
    ``invariant`` declares that the value depends only on the orbit
    coordinate of a catalog region, which enables deduplication.
    """

    fn: Callable
    order: int = 4
    invariant: bool = True
    needs_context: bool = True


def as_integrand(obj) -> Integrand:
    return obj if isinstance(obj, Integrand) else Integrand(obj)


# ---------------------------------------------------------------------------
# parameter patches


@dataclass(frozen=True)
class Patch:
    lower: np.ndarray
    upper: np.ndarray
    phi: Callable[[Sequence], list]
    orbit_axis: int | None = None  # axis carrying invariant dependence
    rep: Callable[[np.ndarray], np.ndarray] | None = None  # orbit values -> chart points
    dedup: bool = True

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class NodeSet:
    points: np.ndarray  # (N, n) chart coordinates
    weights: np.ndarray  # (N,) quadrature weight times measure density
    orbit: np.ndarray | None  # (N,) index into reps, or None when no dedup
    reps: np.ndarray | None  # (M, n)


def gauss_legendre(q: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(q)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _param_grid(patch: Patch, q: int):
    axes = [gauss_legendre(q, lo, hi) for lo, hi in zip(patch.lower, patch.upper)]
    xs = [a[0] for a in axes]
    grid = np.stack(np.meshgrid(*xs, indexing="ij"), axis=-1).reshape(-1, patch.dim)
    w = reduce(np.multiply.outer, [a[1] for a in axes]).reshape(-1)
    return xs, grid, w


def _phi_with_jacobian(patch: Patch, u: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    d = patch.dim
    ujets = [Jet.variable(i, u[:, i], d, 1) for i in range(d)]
    comps = patch.phi(ujets)
    x = np.empty((u.shape[0], n))
    jac = np.zeros((u.shape[0], n, d))
    for k, c in enumerate(comps):
        if isinstance(c, Jet):
            x[:, k] = c.coeffs[..., 0]
            jac[:, k, :] = c.coeffs[..., 1 : 1 + d]
        else:
            x[:, k] = c
    return x, jac


def build_nodes(geom: GeometrySpec, patch: Patch, q: int, chart: int = 0) -> NodeSet:
    n = geom.dim
    xs, grid, wq = _param_grid(patch, q)
    points = np.empty((grid.shape[0], n))
    weights = np.empty(grid.shape[0])
    for s in range(0, grid.shape[0], CHUNK):
        sl = slice(s, s + CHUNK)
        x, jac = _phi_with_jacobian(patch, grid[sl], n)
        g = metric_values(geom, x, chart)
        if patch.dim == n:
            dens = np.abs(np.linalg.det(jac)) * np.sqrt(np.linalg.det(g))
        else:
            h = np.einsum("nka,nkl,nlb->nab", jac, g, jac)
            dens = np.sqrt(np.linalg.det(h))
        points[sl] = x
        weights[sl] = wq[sl] * dens
    if not patch.dedup:
        return NodeSet(points, weights, None, None)
    if patch.orbit_axis is None:
        return NodeSet(points, weights, np.zeros(grid.shape[0], dtype=np.intp), patch.rep(None))
    orbit = np.indices((q,) * patch.dim)[patch.orbit_axis].reshape(-1)
    return NodeSet(points, weights, orbit, patch.rep(xs[patch.orbit_axis]))


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class QuadratureRegion:
    geometry: GeometrySpec
    r: float | None
    q: int
    kind: str  # ball | slab | closed | indicator
    volume: tuple[Patch, ...]
    boundary: tuple[Patch, ...] = field(default_factory=tuple)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def nodes(self, patch: Patch, q: int) -> NodeSet:
        key = ("nodes", id(patch), q)
        if key not in self._cache:
            self._cache[key] = build_nodes(self.geometry, patch, q)
        return self._cache[key]

    def cached(self, key, compute):
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]

    @property
    def closed(self) -> bool:
        return self.kind == "closed"

    @property
    def low_accuracy(self) -> bool:
        return self.kind == "indicator"

    def with_level(self, r: float) -> QuadratureRegion:
        return make_region(self.geometry, r, self.q)


def _panels(patch: Patch) -> tuple[Patch, ...]:
    """Splits the orbit axis so node spacing does not grow with the region.

    A single Gauss-Legendre panel over a long slab under-resolves the
    Gaussian weight; panels keep the per-unit node density fixed.  Deduplicated
    integrands are evaluated once per orbit node, so extra panels are cheap.
    """
    ax = patch.orbit_axis
    lo, hi = float(patch.lower[ax]), float(patch.upper[ax])
    k = max(1, math.ceil((hi - lo) / PANEL_WIDTH - 1e-12))
    if k == 1:
        return (patch,)
    cuts = np.linspace(lo, hi, k + 1)
    out = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        lower, upper = patch.lower.copy(), patch.upper.copy()
        lower[ax], upper[ax] = a, b
        out.append(Patch(lower, upper, patch.phi, patch.orbit_axis, patch.rep, patch.dedup))
    return tuple(out)


def _ball_patches(radius: float):
    def sph(rho, a, b, c):
        sa, sb = J.sin(a), J.sin(b)
        return [rho * J.cos(a), rho * sa * J.cos(b), rho * sa * sb * J.cos(c), rho * sa * sb * J.sin(c)]

    def rep_ball(rho):
        out = np.zeros((len(rho), 4))
        out[:, 0] = rho
        return out

    vol = Patch(
        np.array([0.0, 0.0, 0.0, 0.0]),
        np.array([radius, math.pi, math.pi, 2 * math.pi]),
        lambda u: sph(*u),
        orbit_axis=0,
        rep=rep_ball,
    )
    bnd = Patch(
        np.array([0.0, 0.0, 0.0]),
        np.array([math.pi, math.pi, 2 * math.pi]),
        lambda u: sph(radius, *u),
        rep=lambda _: np.array([[radius, 0.0, 0.0, 0.0]]),
    )
    return _panels(vol), (bnd,)


_FIBRE_REP = (0.5 * math.pi, 0.5 * math.pi, math.pi)


def _slab_patches(half: float):
    def rep_slab(t):
        out = np.empty((len(t), 4))
        out[:, :3] = _FIBRE_REP
        out[:, 3] = t
        return out

    vol = Patch(
        np.array([0.0, 0.0, 0.0, -half]),
        np.array([math.pi, math.pi, 2 * math.pi, half]),
        lambda u: list(u),
        orbit_axis=3,
        rep=rep_slab,
    )

    def face(t0):
        return Patch(
            np.array([0.0, 0.0, 0.0]),
            np.array([math.pi, math.pi, 2 * math.pi]),
            lambda u: list(u) + [t0],
            rep=lambda _: np.array([list(_FIBRE_REP) + [t0]]),
        )

    return _panels(vol), (face(-half), face(half))


def make_region(geom: GeometrySpec, r: float | None = None, q: int = DEFAULT_Q) -> QuadratureRegion:
    """Omega_r = {f <= r}; closed manifolds ignore r and integrate over M."""
    c = geom.chart
    if geom.closed:
        mid = 0.5 * (c.lower + c.upper)
        vol = Patch(c.lower.copy(), c.upper.copy(), lambda u: list(u), rep=lambda _: mid[None, :])
        return QuadratureRegion(geom, None, q, "closed", (vol,), ())
    if not geom.has_potential:
        raise QuadratureError(f"{geom.name} has no potential f, so no sublevel sets")
    if r is None:
        raise QuadratureError("a level r is required on non-compact geometries")
    r = float(r)
    if geom.name == "GAUSS":
        if r <= 0:
            raise QuadratureError(f"r = {r} is below min f = 0: empty region")
        radius = 2.0 * math.sqrt(r)
        if radius > float(np.min(c.upper)):
            raise QuadratureError(f"ball of radius {radius:.3f} exceeds chart coverage")
        vol, bnd = _ball_patches(radius)
        return QuadratureRegion(geom, r, q, "ball", vol, bnd)
    if geom.name == "CYL":
        fmin = geom.params.get("f_min", 1.5)
        if r <= fmin:
            raise QuadratureError(f"r = {r} is not above min f = {fmin}: empty or singular region")
        half = 2.0 * math.sqrt(r - fmin)
        if half > c.upper[3]:
            raise QuadratureError(f"slab |t| <= {half:.3f} exceeds chart coverage")
        vol, bnd = _slab_patches(half)
        return QuadratureRegion(geom, r, q, "slab", vol, bnd)
    vol = Patch(c.lower.copy(), c.upper.copy(), lambda u: list(u), dedup=False)
    return QuadratureRegion(geom, r, q, "indicator", (vol,), ())


# ---------------------------------------------------------------------------
# evaluation


def _evaluate(geom: GeometrySpec, integrand: Integrand, nodes: NodeSet) -> np.ndarray:
    if not integrand.needs_context:
        return np.asarray(integrand.fn(nodes.points), dtype=float)
    if integrand.invariant and nodes.orbit is not None:
        ctx = PointContext(geom, nodes.reps, integrand.order)
        vals = np.asarray(integrand.fn(ctx), dtype=float)
        return vals[nodes.orbit]
    parts = []
    for s in range(0, nodes.points.shape[0], CONTEXT_CHUNK):
        ctx = PointContext(geom, nodes.points[s : s + CONTEXT_CHUNK], integrand.order)
        parts.append(np.asarray(integrand.fn(ctx), dtype=float))
    return np.concatenate(parts, axis=0)


def _invariant_values(geom: GeometrySpec, integrand: Integrand, node_sets: list[NodeSet]) -> list[np.ndarray]:
    """One context over the orbit representatives of every panel."""
    reps = np.vstack([ns.reps for ns in node_sets])
    vals = np.asarray(integrand.fn(PointContext(geom, reps, integrand.order)), dtype=float)
    out, start = [], 0
    for ns in node_sets:
        out.append(vals[start : start + len(ns.reps)][ns.orbit])
        start += len(ns.reps)
    return out


def _sum(region: QuadratureRegion, integrand: Integrand, patches, q: int, weighted: bool) -> float:
    geom = region.geometry
    node_sets = [region.nodes(p, q) for p in patches]
    if not node_sets:
        return 0.0
    if integrand.needs_context and integrand.invariant and all(ns.orbit is not None for ns in node_sets):
        values = _invariant_values(geom, integrand, node_sets)
    else:
        values = [_evaluate(geom, integrand, ns) for ns in node_sets]
    total = []
    for patch, nodes, vals in zip(patches, node_sets, values):
        w = nodes.weights
        if weighted or region.kind == "indicator":
            f = region.cached(("f", id(patch), q), lambda: potential_values(geom, nodes.points))
            if weighted:
                w = w * np.exp(-f)
            if region.kind == "indicator":
                w = w * (f <= region.r)
        wb = w.reshape((-1,) + (1,) * (vals.ndim - 1))
        # node axis last and contiguous so numpy's pairwise summation applies
        total.append(np.sum(np.ascontiguousarray(np.moveaxis(vals * wb, 0, -1)), axis=-1))
    out = np.sum(np.stack(total), axis=0)
    return float(out) if out.ndim == 0 else out


def _result(region, integrand, patches, weighted, measure, q) -> IntegralResult:
    q = region.q if q is None else q
    v = _sum(region, integrand, patches, q, weighted)
    v_half = _sum(region, integrand, patches, max(q // 2, 1), weighted)
    return IntegralResult(v, np.abs(v - v_half) if np.ndim(v) else abs(v - v_half), q, measure, region.low_accuracy)


def integrate_region(region: QuadratureRegion, integrand, weighted: bool = False, q: int | None = None) -> IntegralResult:
    integrand = as_integrand(integrand)
    if weighted and not region.geometry.has_potential:
        raise QuadratureError("weighted measure needs a potential f")
    return _result(region, integrand, region.volume, weighted, "e^{-f}dV" if weighted else "dV", q)


def check_regular(region: QuadratureRegion) -> float:
    """min |grad f| over boundary representatives; raises if r is not regular."""
    if region.closed or not region.boundary:
        return math.inf
    pts = np.vstack([p.rep(None) for p in region.boundary])
    grad2 = _grad_f_norm2(region.geometry, pts)
    m = float(np.sqrt(grad2.min()))
    if m < REGULAR_MIN_GRAD:
        raise QuadratureError(f"r = {region.r} is not a regular value (min |grad f| = {m:.2e})")
    return m


def _grad_f_norm2(geom: GeometrySpec, points: np.ndarray) -> np.ndarray:
    f = potential_at(geom, points, 1)
    df = f.coeffs[..., 1 : 1 + geom.dim]
    ginv = np.linalg.inv(metric_values(geom, points))
    return np.einsum("...i,...ij,...j->...", df, ginv, df)


def integrate_boundary(region: QuadratureRegion, integrand, weighted: bool = False, q: int | None = None) -> IntegralResult:
    integrand = as_integrand(integrand)
    measure = "e^{-f}dS" if weighted else "dS"
    if region.closed:
        return IntegralResult(0.0, 0.0, region.q if q is None else q, measure)
    if not region.boundary:
        raise QuadratureError(f"no boundary parameterization for {region.kind} regions")
    check_regular(region)
    return _result(region, integrand, region.boundary, weighted, measure, q)


# ---------------------------------------------------------------------------
# Stokes oracle


VectorField = Callable[[Sequence], list]


def log_volume_gradient(geom: GeometrySpec, points: np.ndarray) -> np.ndarray:
    """d_k log sqrt(det g) = 1/2 g^{ij} d_k g_{ij} (equals Gamma^i_{ik})."""
    out = np.empty(points.shape)
    n = geom.dim
    for s in range(0, points.shape[0], CHUNK):
        p = points[s : s + CHUNK]
        comps = geom.chart.metric(coordinate_jets(p, 1))
        g = np.zeros(p.shape[:1] + (n, n, n + 1))
        for i in range(n):
            for j in range(n):
                c = comps[i][j]
                if isinstance(c, Jet):
                    g[:, i, j, :] = c.coeffs
                else:
                    g[:, i, j, 0] = c
        ginv = np.linalg.inv(g[..., 0])
        out[s : s + CHUNK] = 0.5 * np.einsum("bij,bijk->bk", ginv, g[..., 1:])
    return out


def divergence_values(geom: GeometrySpec, X: VectorField, points: np.ndarray, dlog: np.ndarray | None = None) -> np.ndarray:
    """(1/sqrt g) d_i(sqrt g X^i) = d_i X^i + X^i d_i log sqrt(g) at plain points."""
    if dlog is None:
        dlog = log_volume_gradient(geom, points)
    out = None
    for s in range(0, points.shape[0], CHUNK):
        p = points[s : s + CHUNK]
        comps = X(coordinate_jets(p, 1))
        div = 0.0
        for i, c in enumerate(comps):
            dl = dlog[s : s + CHUNK, i]
            if isinstance(c, Jet):
                extra = c.coeffs.ndim - 2
                div = div + c.coeffs[..., 1 + i] + dl.reshape((-1,) + (1,) * extra) * c.coeffs[..., 0]
            else:
                c = np.asarray(c, dtype=float)
                div = div + dl.reshape((-1,) + (1,) * max(c.ndim - 1, 0)) * c
        if out is None:
            out = np.empty((points.shape[0],) + np.shape(div)[1:])
        out[s : s + CHUNK] = div
    return out


def flux_values(geom: GeometrySpec, X: VectorField, points: np.ndarray) -> np.ndarray:
    """<X, nu> with nu = grad f / |grad f|."""
    f = potential_at(geom, points, 1)
    df = f.coeffs[..., 1 : 1 + geom.dim]
    ginv = np.linalg.inv(metric_values(geom, points))
    norm = np.sqrt(np.einsum("...i,...ij,...j->...", df, ginv, df))
    comps = X([points[:, i] for i in range(geom.dim)])
    comps = np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in comps])
    extra = comps[0].ndim - 1
    dot = sum(c * df[:, i].reshape((-1,) + (1,) * extra) for i, c in enumerate(comps))
    return dot / norm.reshape((-1,) + (1,) * extra)


def embedding_coordinates(geom: GeometrySpec) -> Callable[[Sequence], list] | None:
    """Smooth ambient coordinates for building test vector fields.

    On CYL the chart is (psi, theta, phi, t); polynomials in the unit-S^3
    embedding and t give components that are bounded and periodic in phi, so
    only the two end caps carry flux.
    """
    if geom.name == "CYL":

        def emb(x):
            s0, s1 = J.sin(x[0]), J.sin(x[1])
            return [J.cos(x[0]), s0 * J.cos(x[1]), s0 * s1 * J.cos(x[2]), s0 * s1 * J.sin(x[2]), x[3]]

        return emb
    return None


@dataclass(frozen=True)
class PolynomialField:
    """Chart components X^i = P_i(y(x)); ``poly.coeffs`` has shape (*fields, n, M)."""

    poly: Polynomial
    embedding: Callable[[Sequence], list] | None = None

    def __call__(self, x: Sequence) -> list:
        y = list(x) if self.embedding is None else self.embedding(x)
        vals, _ = self.poly.evaluate(y)
        n = len(x)
        if isinstance(x[0], Jet):
            return [Jet(vals[..., i, :], x[0].n) for i in range(n)]
        return [vals[..., i] for i in range(n)]


def random_vector_fields(geom: GeometrySpec, count: int, seed: int, degree: int = 3) -> PolynomialField:
    emb = embedding_coordinates(geom)
    nvars = geom.dim + 1 if emb is not None else geom.dim
    return PolynomialField(random_polynomial_field(nvars, degree, seed, (count, geom.dim)), emb)


@dataclass(frozen=True)
class StokesTerms:
    interior: IntegralResult
    flux: IntegralResult

    @property
    def residual(self):
        return np.abs(np.asarray(self.interior.value) - self.flux.value)

    @property
    def relative(self):
        mag = np.maximum(np.abs(self.interior.value), np.abs(self.flux.value))
        res = self.residual
        return np.where(mag > 0, res / np.where(mag > 0, mag, 1.0), res)


def stokes_terms(region: QuadratureRegion, X: VectorField, q: int | None = None) -> StokesTerms:
    geom = region.geometry

    def div(points):
        key = ("dlog", points.shape[0], float(points[:, 0].sum()))
        dlog = region.cached(key, lambda: log_volume_gradient(geom, points))
        return divergence_values(geom, X, points, dlog)

    interior = integrate_region(region, Integrand(div, invariant=False, needs_context=False), q=q)
    flux = integrate_boundary(
        region, Integrand(lambda p: flux_values(geom, X, p), invariant=False, needs_context=False), q=q
    )
    return StokesTerms(interior, flux)


def stokes_residual(region: QuadratureRegion, X: VectorField, q: int | None = None) -> float:
    """|int div X dV - int <X, nu> dS|."""
    return stokes_terms(region, X, q).residual


# ---------------------------------------------------------------------------
# whole-manifold limits


def level_range(geom: GeometrySpec) -> tuple[float, float]:
    """Levels r whose sublevel sets fit inside the chart."""
    c = geom.chart
    if geom.name == "GAUSS":
        return 1.0, (float(np.min(c.upper)) / 2.0) ** 2
    if geom.name == "CYL":
        fmin = geom.params.get("f_min", 1.5)
        return fmin + 1.0, fmin + (float(c.upper[3]) / 2.0) ** 2
    raise QuadratureError(f"no whole-manifold exhaustion for {geom.name}")


@dataclass(frozen=True)
class ManifoldIntegral:
    result: IntegralResult
    r: float | None
    tail: float


def integrate_manifold(
    geom: GeometrySpec,
    integrand,
    weighted: bool = True,
    q: int = DEFAULT_Q,
    tail_tol: float = 1e-8,
    r_start: float = 8.0,
    r_step: float = 4.0,
) -> ManifoldIntegral:
    """Exhaust M by Omega_r until successive values differ by less than ``tail_tol``."""
    if geom.closed:
        return ManifoldIntegral(integrate_region(make_region(geom, None, q), integrand, weighted), None, 0.0)
    lo, hi = level_range(geom)
    r = max(r_start, lo)
    prev = integrate_region(make_region(geom, r, q), integrand, weighted)
    while True:
        r_next = min(r + r_step, hi)
        if r_next <= r:
            return ManifoldIntegral(prev, r, math.inf)
        cur = integrate_region(make_region(geom, r_next, q), integrand, weighted)
        tail = float(np.max(np.abs(np.asarray(cur.value) - prev.value)))
        r, prev = r_next, cur
        if tail < tail_tol:
            return ManifoldIntegral(cur, r, tail)
