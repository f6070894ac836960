"""Exact example geometries and reproducible random metrics.

Metric and potential callables take a sequence of chart coordinates and are
written with the dispatching functions from :mod:`bachlike.jets`, so the same
code evaluates on jets (for curvature) and on plain or ``longdouble`` arrays
(for quadrature weights and the finite-difference oracle).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets as J
from .curvature import christoffel, stack_components
from .jets import Jet
from .tensors import MetricAtPoint

MetricFn = Callable[[Sequence], list]
ScalarFn = Callable[[Sequence], object]

CATALOG_NAMES = ("E4", "GAUSS", "S4", "CYL")
SPHERE_RADIUS = math.sqrt(6.0)
CYL_RADIUS = 2.0
CYL_SHIFT = 1.5
FLAT_HALF_WIDTH = 12.0
CYL_HALF_LENGTH = 12.0


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    lower: np.ndarray
    upper: np.ndarray
    metric: MetricFn
    f: ScalarFn | None = None
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class GeometrySpec:
    name: str
    dim: int
    charts: tuple[Chart, ...]
    margin: float = 1e-3
    closed: bool = False
    description: str = ""
    params: dict = field(default_factory=dict)

    @property
    def chart(self) -> Chart:
        return self.charts[0]

    @property
    def has_potential(self) -> bool:
        return self.chart.f is not None


# ---------------------------------------------------------------------------
# evaluation helpers


def coordinate_jets(points: np.ndarray, order: int) -> list[Jet]:
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    return [Jet.variable(i, points[..., i], n, order) for i in range(n)]


def metric_at(geom: GeometrySpec, points: np.ndarray, order: int = 5, chart: int = 0) -> MetricAtPoint:
    """Metric bundle at one point (shape ``(n,)``) or a batch (``(..., n)``)."""
    points = np.asarray(points, dtype=float)
    x = coordinate_jets(points, order)
    comps = geom.charts[chart].metric(x)
    g = stack_components(comps, geom.dim, order, points.shape[:-1])
    return christoffel(g, geom.dim)


def potential_at(geom: GeometrySpec, points: np.ndarray, order: int = 5, chart: int = 0) -> Jet | None:
    f = geom.charts[chart].f
    if f is None:
        return None
    points = np.asarray(points, dtype=float)
    x = coordinate_jets(points, order)
    val = f(x)
    if not isinstance(val, Jet):
        val = Jet.constant(np.broadcast_to(val, points.shape[:-1]), geom.dim, order)
    return val


def metric_values(geom: GeometrySpec, points: np.ndarray, chart: int = 0) -> np.ndarray:
    """Plain metric matrices at points (dtype follows ``points``)."""
    points = np.asarray(points)
    x = [points[..., i] for i in range(points.shape[-1])]
    comps = geom.charts[chart].metric(x)
    n = geom.dim
    out = np.zeros(points.shape[:-1] + (n, n), dtype=points.dtype)
    for i in range(n):
        for j in range(n):
            out[..., i, j] = comps[i][j]
    return out


def potential_values(geom: GeometrySpec, points: np.ndarray, chart: int = 0) -> np.ndarray:
    f = geom.charts[chart].f
    if f is None:
        raise GeometryError(f"geometry {geom.name} has no potential")
    points = np.asarray(points)
    return np.broadcast_to(f([points[..., i] for i in range(points.shape[-1])]), points.shape[:-1])


# ---------------------------------------------------------------------------
# catalog


def _flat_metric(x):
    n = len(x)
    return [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]


def _gauss_f(x):
    return sum(xi * xi for xi in x) / 4.0


def _sphere_metric(radius: float, n: int):
    """Round S^n(radius) in hyperspherical angles (chi_1, ..., chi_{n-1}, phi)."""

    def metric(x):
        a2 = radius * radius
        diag = []
        w = a2
        for i in range(n):
            diag.append(w)
            if i < n - 1:
                s = J.sin(x[i])
                w = w * s * s
        return [[diag[i] if i == j else 0.0 for j in range(n)] for i in range(n)]

    return metric


def _stereo_metric(radius: float, n: int):
    """Round S^n(radius) in stereographic coordinates: 4 a^2 / (1 + |y|^2)^2 times delta.

    Smooth and well conditioned on the whole box, unlike the angle chart,
    whose inverse metric blows up at the poles.
    """

    def metric(x):
        s = 1.0 + sum(xi * xi for xi in x[:n])
        c = 4.0 * radius * radius / (s * s)
        return [[c if i == j else 0.0 for j in range(n)] for i in range(n)]

    return metric


STEREO_HALF_WIDTH = 1.0


def _s4_f(x):
    return 0.0 * x[0] + 2.0


def _cyl_metric(x):
    s3 = _sphere_metric(CYL_RADIUS, 3)(x[:3])
    return [row + [0.0] for row in s3] + [[0.0, 0.0, 0.0, 1.0]]


def _cyl_stereo_metric(x):
    s3 = _stereo_metric(CYL_RADIUS, 3)(x[:3])
    return [row + [0.0] for row in s3] + [[0.0, 0.0, 0.0, 1.0]]


def _cyl_f(x):
    t = x[3]
    return t * t / 4.0 + CYL_SHIFT


def _angle_box(n_angles: int):
    lower = np.zeros(n_angles)
    upper = np.full(n_angles, math.pi)
    upper[-1] = 2 * math.pi
    return lower, upper


def catalog_get(name: str) -> GeometrySpec:
    name = name.upper()
    if name in ("E4", "GAUSS"):
        lo, hi = np.full(4, -FLAT_HALF_WIDTH), np.full(4, FLAT_HALF_WIDTH)
        f = _gauss_f if name == "GAUSS" else None
        chart = Chart(lo, hi, _flat_metric, f, ("x0", "x1", "x2", "x3"))
        desc = "flat R^4" + (" with f = |x|^2/4 (Gaussian shrinker)" if f else "")
        return GeometrySpec(name, 4, (chart,), description=desc)
    if name == "S4":
        lo, hi = _angle_box(4)
        chart = Chart(lo, hi, _sphere_metric(SPHERE_RADIUS, 4), _s4_f, ("chi1", "chi2", "chi3", "phi"))
        w = np.full(4, STEREO_HALF_WIDTH)
        stereo = Chart(-w, w, _stereo_metric(SPHERE_RADIUS, 4), _s4_f, ("y0", "y1", "y2", "y3"))
        return GeometrySpec(name, 4, (chart, stereo), closed=True, description="round S^4 of radius sqrt(6), f = 2",
                            params={"pointwise_chart": 1})
    if name == "CYL":
        lo, hi = _angle_box(3)
        lo = np.append(lo, -CYL_HALF_LENGTH)
        hi = np.append(hi, CYL_HALF_LENGTH)
        chart = Chart(lo, hi, _cyl_metric, _cyl_f, ("psi", "theta", "phi", "t"))
        w = np.array([STEREO_HALF_WIDTH] * 3 + [CYL_HALF_LENGTH])
        stereo = Chart(-w, w, _cyl_stereo_metric, _cyl_f, ("y0", "y1", "y2", "t"))
        return GeometrySpec(name, 4, (chart, stereo), description="S^3(2) x R with f = t^2/4 + 3/2",
                            params={"f_min": CYL_SHIFT, "pointwise_chart": 1})
    raise GeometryError(f"unknown geometry {name!r}; expected one of {', '.join(CATALOG_NAMES)}")


# ---------------------------------------------------------------------------
# random polynomial metrics


@dataclass(frozen=True)
class RandomMetricSpec:
    seed: int = 0
    dim: int = 4
    epsilon: float = 0.05
    degree: int = 3
    with_f: bool = False
    f_degree: int = 3
    half_width: float = 1.0


@dataclass(frozen=True)
class Polynomial:
    """sum_a coeffs[..., a] * x^exponents[a]; coefficient arrays may carry tensor axes."""

    coeffs: np.ndarray
    exponents: np.ndarray

    def monomials(self, x: Sequence):
        if isinstance(x[0], Jet):
            n, order = x[0].n, x[0].order
            one = Jet.constant(np.ones(x[0].batch_shape), n, order)
            built: dict[tuple[int, ...], Jet] = {tuple([0] * len(x)): one}
            for e in sorted(map(tuple, self.exponents), key=sum):
                if e in built:
                    continue
                i = next(k for k, v in enumerate(e) if v)
                parent = e[:i] + (e[i] - 1,) + e[i + 1 :]
                built[e] = built[parent] * x[i]  # parent has lower degree, already built
            out = [built[tuple(e)].coeffs for e in self.exponents]
            return np.stack(out, axis=-2)  # (..., M, N)
        arr = np.stack([np.asarray(xi) for xi in x], axis=-1)
        return np.prod(arr[..., None, :] ** self.exponents, axis=-1)  # (..., M)

    def evaluate(self, x: Sequence):
        """Returns (values, number of tensor axes); contraction is one GEMM."""
        mon = self.monomials(x)
        t = self.coeffs.ndim - 1
        c = self.coeffs.reshape(-1, self.coeffs.shape[-1])
        if isinstance(x[0], Jet):
            # mon (*b, M, N) -> (*b, *t, N)
            batch, (m, z) = mon.shape[:-2], mon.shape[-2:]
            flat = np.ascontiguousarray(np.swapaxes(mon, -1, -2)).reshape(-1, m) @ c.T
            out = np.swapaxes(flat.reshape(batch + (z, c.shape[0])), -1, -2)
            return out.reshape(batch + self.coeffs.shape[:-1] + (z,)), t
        c = c.astype(mon.dtype)
        return (mon @ c.T).reshape(mon.shape[:-1] + self.coeffs.shape[:-1]), t


def exponents_up_to(n: int, degree: int) -> np.ndarray:
    return np.array([e for e in itertools.product(range(degree + 1), repeat=n) if sum(e) <= degree])


def _random_metric_fn(poly: Polynomial, eps: float, n: int) -> MetricFn:
    def metric(x):
        vals, _ = poly.evaluate(x)
        if isinstance(x[0], Jet):
            nv = x[0].n
            out = []
            for i in range(n):
                row = []
                for j in range(n):
                    c = eps * vals[..., i, j, :]
                    if i == j:
                        c = c.copy()
                        c[..., 0] += 1.0
                    row.append(Jet(c, nv))
                out.append(row)
            return out
        return [[(1.0 if i == j else 0.0) + eps * vals[..., i, j] for j in range(n)] for i in range(n)]

    return metric


def _poly_scalar_fn(poly: Polynomial) -> ScalarFn:
    def f(x):
        vals, _ = poly.evaluate(x)
        if isinstance(x[0], Jet):
            return Jet(vals[..., 0, :], x[0].n)
        return vals[..., 0]

    return f


def _check_points(n: int, half_width: float, rng: np.random.Generator) -> np.ndarray:
    corners = np.array(list(itertools.product((-half_width, half_width), repeat=n)))
    inner = rng.uniform(-half_width, half_width, size=(64, n))
    return np.vstack([np.zeros((1, n)), corners, inner])


def random_metric(spec: RandomMetricSpec) -> GeometrySpec:
    """g = delta + eps * Q(x), Q symmetric with polynomial entries of degree <= d."""
    n, eps = spec.dim, spec.epsilon
    rng = np.random.default_rng(spec.seed)
    exps = exponents_up_to(n, spec.degree)
    probe = _check_points(n, spec.half_width, np.random.default_rng(spec.seed + 1_000_003))
    for attempt in range(100):
        raw = rng.uniform(-1.0, 1.0, size=(n, n, len(exps)))
        q = 0.5 * (raw + raw.transpose(1, 0, 2))
        poly = Polynomial(q, exps)
        metric = _random_metric_fn(poly, eps, n)
        gvals = np.array(metric([probe[:, i] for i in range(n)]), dtype=float)  # (n, n, P)
        w = np.linalg.eigvalsh(np.moveaxis(gvals, -1, 0))
        if w.min() > 0:
            break
    else:
        raise GeometryError(f"no positive-definite metric after 100 samples (eps = {eps})")
    f = None
    if spec.with_f:
        fexp = exponents_up_to(n, spec.f_degree)
        fc = rng.uniform(-1.0, 1.0, size=(1, len(fexp)))
        f = _poly_scalar_fn(Polynomial(fc, fexp))
    lo, hi = np.full(n, -spec.half_width), np.full(n, spec.half_width)
    chart = Chart(lo, hi, metric, f, tuple(f"x{i}" for i in range(n)))
    return GeometrySpec(
        "RAND",
        n,
        (chart,),
        description=f"random polynomial metric (seed {spec.seed}, eps {eps}, degree {spec.degree})",
        params={"seed": spec.seed, "epsilon": eps, "degree": spec.degree, "attempts": attempt + 1,
                "min_eigenvalue": float(w.min()), "poly": poly},
    )


# ---------------------------------------------------------------------------


def sample_points(geom: GeometrySpec, count: int, seed: int = 0, chart: int = 0) -> np.ndarray:
    """Uniform points in the chart box shrunk by the geometry's margin."""
    if count < 1:
        raise GeometryError("count must be >= 1")
    c = geom.charts[chart]
    lo = c.lower + geom.margin
    hi = c.upper - geom.margin
    if np.any(hi <= lo):
        raise GeometryError("chart box is empty after margin shrink")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((count, geom.dim))


def random_polynomial_field(n: int, degree: int, seed: int, rank_shape: tuple[int, ...] = ()) -> Polynomial:
    rng = np.random.default_rng(seed)
    exps = exponents_up_to(n, degree)
    return Polynomial(rng.uniform(-1.0, 1.0, size=rank_shape + (len(exps),)), exps)


def resolve_geometry(name: str, **random_kw) -> GeometrySpec:
    if name.upper() in ("RAND", "RAND4", "RAND5"):
        if name.upper() == "RAND5":
            random_kw.setdefault("dim", 5)
        return random_metric(RandomMetricSpec(**random_kw))
    return catalog_get(name)
