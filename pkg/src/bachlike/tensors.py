"""Point-local tensor algebra over jet-valued components.

A :class:`PointTensor` holds an array of shape ``(*batch, n, ..., n, N)``:
optional batch axes (independent chart points), one axis per tensor slot,
and the jet coefficients last.  Index placement is tracked per slot as
``"u"`` (contravariant) or ``"d"`` (covariant).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import Jet, JetError, gradient_coeffs, n_coeffs, order_from_size, reduce_pairs, tables

LETTERS = "abcdefghijklmnopqrstuvwxy"  # "z" is reserved for the pair axis


class TensorError(ValueError):
    pass


def _order(a: np.ndarray, nvars: int) -> int:
    return order_from_size(nvars, a.shape[-1])


def _mul2(sa: str, a: np.ndarray, sb: str, b: np.ndarray, so: str, nvars: int) -> np.ndarray:
    k = min(_order(a, nvars), _order(b, nvars))
    t = tables(nvars, k)
    ap = a[..., : t.size][..., t.left]
    bp = b[..., : t.size][..., t.right]
    prod = np.einsum(f"...{sa}z,...{sb}z->...{so}z", ap, bp)
    return reduce_pairs(prod, t)


def jet_einsum(subscripts: str, *operands: np.ndarray, nvars: int) -> np.ndarray:
    """Einstein summation over jet-valued arrays.

    Subscripts name tensor axes only; batch axes and the coefficient axis are
    implicit.  Operands are multiplied as truncated jets, pairwise, always
    contracting the pair with the smallest intermediate; the result carries
    the smallest operand order.
    """
    ins, out = subscripts.replace(" ", "").split("->")
    specs = ins.split(",")
    if len(specs) != len(operands):
        raise TensorError(f"{len(specs)} subscripts for {len(operands)} operands")
    if len(specs) == 1:
        return np.einsum(f"...{specs[0]}z->...{out}z", operands[0])
    items = list(zip(specs, operands))
    while len(items) > 1:
        best = None
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                rest = "".join(s for k, (s, _) in enumerate(items) if k not in (i, j))
                needed = set(rest) | set(out)
                res = "".join(c for c in dict.fromkeys(items[i][0] + items[j][0]) if c in needed)
                shared = bool(set(items[i][0]) & set(items[j][0]))
                key = (len(res), not shared, i, j)
                if best is None or key < best[0]:
                    best = (key, i, j, res)
        _, i, j, res = best
        if len(items) == 2:
            res = out
        (sa, a), (sb, b) = items[i], items[j]
        merged = (res, _mul2(sa, a, sb, b, res, nvars))
        items = [it for k, it in enumerate(items) if k not in (i, j)] + [merged]
    s, a = items[0]
    if s != out:
        a = np.einsum(f"...{s}z->...{out}z", a)
    return a


def add_truncated(*arrays: np.ndarray, nvars: int) -> np.ndarray:
    """Sum jet arrays after truncating all to the lowest order present."""
    k = min(_order(a, nvars) for a in arrays)
    size = n_coeffs(nvars, k)
    out = arrays[0][..., :size].copy()
    for a in arrays[1:]:
        out = out + a[..., :size]
    return out


def scale_jets(a: np.ndarray, s) -> np.ndarray:
    """Multiply jets by plain (batch-shaped) scalars."""
    s = np.asarray(s, dtype=float)
    return a * s.reshape(s.shape + (1,) * (a.ndim - s.ndim))


@dataclass(frozen=True)
class PointTensor:
    data: np.ndarray
    variance: str
    nvars: int
    symmetry: str = "none"  # none | symmetric-pair | riemann-type

    def __post_init__(self):
        if any(v not in "ud" for v in self.variance):
            raise TensorError(f"variance must use 'u'/'d', got {self.variance!r}")
        r = len(self.variance)
        if self.data.ndim < r + 1:
            raise TensorError("data has fewer axes than rank + coefficient axis")
        order_from_size(self.nvars, self.data.shape[-1])

    @property
    def rank(self) -> int:
        return len(self.variance)

    @property
    def dim(self) -> int:
        return self.data.shape[-2] if self.rank else 0

    @property
    def order(self) -> int:
        return _order(self.data, self.nvars)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.data.shape[: self.data.ndim - self.rank - 1]

    @property
    def value(self) -> np.ndarray:
        """Component values at the base point(s)."""
        return self.data[..., 0]

    def component(self, *idx: int) -> Jet:
        return Jet(self.data[(Ellipsis, *idx, slice(None))], self.nvars)

    def truncated(self, order: int) -> PointTensor:
        if order > self.order:
            raise JetError(f"cannot raise order {self.order} to {order}")
        return PointTensor(
            self.data[..., : n_coeffs(self.nvars, order)], self.variance, self.nvars, self.symmetry
        )

    def with_data(self, data: np.ndarray, variance: str | None = None, symmetry: str = "none"):
        return PointTensor(data, self.variance if variance is None else variance, self.nvars, symmetry)

    def __add__(self, other: PointTensor) -> PointTensor:
        _check_same(self, other)
        return self.with_data(add_truncated(self.data, other.data, nvars=self.nvars))

    def __sub__(self, other: PointTensor) -> PointTensor:
        _check_same(self, other)
        return self.with_data(add_truncated(self.data, -other.data, nvars=self.nvars))

    def __neg__(self) -> PointTensor:
        return self.with_data(-self.data, symmetry=self.symmetry)

    def __mul__(self, s) -> PointTensor:
        if isinstance(s, Jet):
            return self.with_data(
                jet_einsum("," + LETTERS[: self.rank] + "->" + LETTERS[: self.rank],
                           s.coeffs, self.data, nvars=self.nvars),
                symmetry=self.symmetry,
            )
        return self.with_data(scale_jets(self.data, s), symmetry=self.symmetry)

    __rmul__ = __mul__


def _check_same(a: PointTensor, b: PointTensor) -> None:
    if a.variance != b.variance or a.nvars != b.nvars:
        raise TensorError(f"incompatible tensors {a.variance!r} / {b.variance!r}")


def scalar_tensor(j: Jet) -> PointTensor:
    return PointTensor(j.coeffs, "", j.n)


def as_jet(t: PointTensor) -> Jet:
    if t.rank:
        raise TensorError("not a scalar")
    return Jet(t.data, t.nvars)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricAtPoint:
    """Metric, inverse metric and Christoffel symbols at a chart point.

    ``christoffel.data[..., k, i, j, :]`` is Gamma^k_{ij}.
    """

    g: PointTensor
    g_inv: PointTensor
    christoffel: PointTensor

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def nvars(self) -> int:
        return self.g.nvars

    @property
    def order(self) -> int:
        return self.g.order


def inverse_metric(g: np.ndarray, nvars: int) -> np.ndarray:
    """Inverse of a jet-valued SPD matrix by a terminating Neumann series.

    With g = g0 + h (h has no constant term), g^{-1} = sum_m (-g0^{-1} h)^m g0^{-1};
    h^(K+1) vanishes in order-K arithmetic, so the sum is exact.
    """
    g0 = g[..., 0]
    w = np.linalg.eigvalsh(g0)
    if np.any(w <= 0):
        raise TensorError(f"metric not positive definite (min eigenvalue {w.min():.3e})")
    g0_inv = np.linalg.inv(g0)
    k = _order(g, nvars)
    h = g.copy()
    h[..., 0] = 0.0
    step = -jet_einsum("ij,jk->ik", _const(g0_inv, nvars, k), h, nvars=nvars)
    base = _const(g0_inv, nvars, k)
    out = base.copy()
    term = base
    for _ in range(k):
        term = jet_einsum("ij,jk->ik", step, term, nvars=nvars)
        out = out + term
    return out


def _const(values: np.ndarray, nvars: int, order: int) -> np.ndarray:
    out = np.zeros(values.shape + (n_coeffs(nvars, order),))
    out[..., 0] = values
    return out


# ---------------------------------------------------------------------------
# operations


def contract(t: PointTensor, slot_a: int, slot_b: int) -> PointTensor:
    r = t.rank
    if not (0 <= slot_a < r and 0 <= slot_b < r) or slot_a == slot_b:
        raise TensorError(f"invalid slots ({slot_a}, {slot_b}) for rank {r}")
    if t.variance[slot_a] == t.variance[slot_b]:
        raise TensorError("contraction needs one upper and one lower slot")
    letters = list(LETTERS[:r])
    letters[slot_b] = letters[slot_a]
    keep = [i for i in range(r) if i not in (slot_a, slot_b)]
    out = "".join(letters[i] for i in keep)
    data = np.einsum(f"...{''.join(letters)}z->...{out}z", t.data)
    return t.with_data(data, "".join(t.variance[i] for i in keep))


def raise_lower(t: PointTensor, slot: int, metric: MetricAtPoint) -> PointTensor:
    if not 0 <= slot < t.rank:
        raise TensorError(f"slot {slot} out of range for rank {t.rank}")
    letters = LETTERS[: t.rank]
    src = letters[slot]
    m = metric.g_inv if t.variance[slot] == "d" else metric.g
    tin = letters.replace(src, "y")
    data = jet_einsum(f"{src}y,{tin}->{letters}", m.data, t.data, nvars=t.nvars)
    v = list(t.variance)
    v[slot] = "u" if v[slot] == "d" else "d"
    return t.with_data(data, "".join(v), symmetry=t.symmetry)


def lower_all(t: PointTensor, metric: MetricAtPoint) -> PointTensor:
    for s, v in enumerate(t.variance):
        if v == "u":
            t = raise_lower(t, s, metric)
    return t


def raise_all(t: PointTensor, metric: MetricAtPoint) -> PointTensor:
    for s, v in enumerate(t.variance):
        if v == "d":
            t = raise_lower(t, s, metric)
    return t


def partial_derivative(t: PointTensor) -> np.ndarray:
    """Coordinate partials with the derivative axis placed first among tensor axes."""
    if t.order < 1:
        raise JetError("jet order exhausted: covariant derivative needs order >= 1")
    d = gradient_coeffs(t.data, t.nvars)
    nb = len(t.batch_shape)
    return np.moveaxis(d, 0, nb)


def covariant_derivative(t: PointTensor, metric: MetricAtPoint) -> PointTensor:
    """nabla T with the new covariant slot first.

    Follows nabla_k X^j = d_k X^j + G^j_{kp} X^p and
    nabla_k w_j = d_k w_j - G^p_{kj} w_p, slot by slot.
    """
    if t.order < 1:
        raise JetError("jet order exhausted: covariant derivative needs order >= 1")
    terms = [partial_derivative(t)]
    letters = LETTERS[: t.rank]
    out = "x" + letters
    gam = metric.christoffel.data
    for s, v in enumerate(t.variance):
        a = letters[s]
        tin = letters.replace(a, "w")
        if v == "d":
            terms.append(-jet_einsum(f"wx{a},{tin}->{out}", gam, t.data, nvars=t.nvars))
        else:
            terms.append(jet_einsum(f"{a}xw,{tin}->{out}", gam, t.data, nvars=t.nvars))
    return t.with_data(add_truncated(*terms, nvars=t.nvars), "d" + t.variance)


def full_contraction(a: PointTensor, b: PointTensor, metric: MetricAtPoint) -> Jet:
    """<a, b> with every slot paired through the metric."""
    if a.rank != b.rank:
        raise TensorError("rank mismatch")
    a_low = lower_all(a, metric)
    b_up = raise_all(b, metric)
    letters = LETTERS[: a.rank]
    return Jet(jet_einsum(f"{letters},{letters}->", a_low.data, b_up.data, nvars=a.nvars), a.nvars)


def norm2_jet(t: PointTensor, metric: MetricAtPoint) -> Jet:
    return full_contraction(t, t, metric)


def tensor_norm2(t: PointTensor, metric: MetricAtPoint):
    """|t|^2 at the base point(s)."""
    return norm2_jet(t, metric).value


def trace(t: PointTensor, metric: MetricAtPoint, slot_a: int = 0, slot_b: int = 1) -> PointTensor:
    """Metric trace over two slots of any variance."""
    if t.variance[slot_a] == t.variance[slot_b]:
        t = raise_lower(t, slot_a, metric)
    return contract(t, slot_a, slot_b)


def max_abs(t: PointTensor | np.ndarray, rank: int | None = None):
    """Largest base-point component magnitude (per batch entry)."""
    if isinstance(t, PointTensor):
        v, r = t.value, t.rank
    else:
        v, r = t, (t.ndim if rank is None else rank)
    if r == 0:
        return np.abs(v)
    return np.abs(v).reshape(v.shape[: v.ndim - r] + (-1,)).max(axis=-1)


def symmetry_residual(t: PointTensor, perm: Sequence[int], sign: float = 1.0):
    """max |T - sign * T∘perm| at the base point."""
    r = t.rank
    v = t.value
    nb = v.ndim - r
    axes = list(range(nb)) + [nb + p for p in perm]
    return max_abs(v - sign * np.transpose(v, axes), r)
