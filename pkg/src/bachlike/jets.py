"""Truncated multivariate Taylor jets.

A jet in ``n`` variables truncated at order ``K`` stores the Taylor
coefficients ``d^alpha f / alpha!`` for every multi-index with
``|alpha| <= K``.  Coefficients live on the last axis of a numpy array in
graded order (all order-0 entries, then order-1, ...), so truncating to a
lower order is a prefix slice.  Leading axes are batch axes and broadcast.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

MAX_ORDER = 7


class JetError(ValueError):
    """Raised on malformed jet operations (shape, order, domain)."""


def n_coeffs(n: int, order: int) -> int:
    return math.comb(n + order, order)


@lru_cache(maxsize=None)
def multi_indices(n: int, order: int = MAX_ORDER) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of total degree <= order, in graded order."""
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        level = [a for a in itertools.product(range(deg + 1), repeat=n) if sum(a) == deg]
        level.sort(reverse=True)
        out.extend(level)
    return tuple(out)


@lru_cache(maxsize=None)
def _rank(n: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(n))}


def index_of(alpha: Sequence[int]) -> int:
    return _rank(len(alpha))[tuple(alpha)]


@dataclass(frozen=True)
class _Tables:
    n: int
    order: int
    size: int
    levels: np.ndarray  # total degree of each coefficient
    left: np.ndarray  # product pairs (left[p], right[p]) -> target[p]
    right: np.ndarray
    target: np.ndarray
    starts: np.ndarray  # first pair of each target segment
    factorials: np.ndarray  # alpha! per coefficient


@lru_cache(maxsize=None)
def tables(n: int, order: int) -> _Tables:
    if n < 1:
        raise JetError(f"jet dimension must be positive, got {n}")
    if not 0 <= order <= MAX_ORDER:
        raise JetError(f"jet order must lie in [0, {MAX_ORDER}], got {order}")
    size = n_coeffs(n, order)
    idx = multi_indices(n)[:size]
    rank = _rank(n)
    levels = np.array([sum(a) for a in idx])
    triples = []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            if levels[i] + levels[j] <= order:
                triples.append((rank[tuple(x + y for x, y in zip(a, b))], i, j))
    # sorted by target so products reduce with one add.reduceat
    triples.sort()
    target, left, right = (np.array(v) for v in zip(*triples))
    starts = np.flatnonzero(np.r_[True, target[1:] != target[:-1]])
    fact = np.array([math.prod(math.factorial(x) for x in a) for a in idx], dtype=float)
    return _Tables(n, order, size, levels, left, right, target, starts, fact)


@lru_cache(maxsize=None)
def order_from_size(n: int, size: int) -> int:
    for k in range(MAX_ORDER + 1):
        if n_coeffs(n, k) == size:
            return k
    raise JetError(f"{size} coefficients is not a complete jet in {n} variables")


@lru_cache(maxsize=None)
def _derivative_map(n: int, order: int, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Source indices and factors so that d/dx_axis maps order -> order-1."""
    rank = _rank(n)
    out_idx = multi_indices(n)[: n_coeffs(n, order - 1)]
    src, fac = [], []
    for b in out_idx:
        a = list(b)
        a[axis] += 1
        src.append(rank[tuple(a)])
        fac.append(float(a[axis]))
    return np.array(src), np.array(fac)


# ---------------------------------------------------------------------------
# raw coefficient-array kernels (trailing axis = coefficients)


def truncate(c: np.ndarray, n: int, order: int) -> np.ndarray:
    return c[..., : n_coeffs(n, order)]


def mul_coeffs(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Truncated product of coefficient arrays (broadcasting over batch)."""
    k = min(order_from_size(n, a.shape[-1]), order_from_size(n, b.shape[-1]))
    t = tables(n, k)
    a = a[..., : t.size]
    b = b[..., : t.size]
    if k <= 1:  # first-order product rule, common in quadrature Jacobians
        a0, b0 = a[..., :1], b[..., :1]
        return np.concatenate([a0 * b0, a0 * b[..., 1:] + a[..., 1:] * b0], axis=-1)
    return reduce_pairs(a[..., t.left] * b[..., t.right], t)


def reduce_pairs(prod: np.ndarray, t: _Tables) -> np.ndarray:
    """Sum pair products into their target coefficient."""
    return np.add.reduceat(prod, t.starts, axis=-1)


def div_coeffs(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Solve q * b = a degree by degree."""
    k = min(order_from_size(n, a.shape[-1]), order_from_size(n, b.shape[-1]))
    t = tables(n, k)
    a = a[..., : t.size]
    b = b[..., : t.size]
    b0 = b[..., :1]
    if np.any(b0 == 0):
        raise JetError("division by a jet with zero constant term")
    shape = np.broadcast_shapes(a.shape, b.shape)
    q = np.zeros(shape)
    for deg in range(k + 1):
        sel = t.levels == deg
        r = a - mul_coeffs(q, b, n)
        q[..., sel] = r[..., sel] / b0
    return q


def deriv_coeffs(c: np.ndarray, n: int, axis: int) -> np.ndarray:
    k = order_from_size(n, c.shape[-1])
    if k < 1:
        raise JetError("jet order exhausted: cannot differentiate an order-0 jet")
    if not 0 <= axis < n:
        raise JetError(f"axis {axis} out of range for {n} variables")
    src, fac = _derivative_map(n, k, axis)
    return c[..., src] * fac


def gradient_coeffs(c: np.ndarray, n: int) -> np.ndarray:
    """Stack d/dx_i for all i on a new axis placed before the coefficients' tensor axes.

    Input shape ``(*batch, *tensor, N_k)`` is returned as
    ``(n, *batch, *tensor, N_{k-1})``; callers move the axis where they need it.
    """
    return np.stack([deriv_coeffs(c, n, i) for i in range(n)])


def compose_coeffs(a: np.ndarray, n: int, series: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate sum_m series[m] * (a - a0)^m by Horner's rule.

    ``series[m]`` is the m-th Taylor coefficient of the outer function at the
    base value ``a0`` (shape broadcastable to the batch shape).
    """
    delta = a.copy()
    delta[..., 0] = 0.0
    out = np.zeros_like(a)
    out[..., 0] = series[-1]
    for m in range(len(series) - 2, -1, -1):
        out = mul_coeffs(out, delta, n)
        out[..., 0] += series[m]
    return out


def _outer_series(fn: str, a0: np.ndarray, k: int, c: float | None = None) -> list[np.ndarray]:
    """Taylor coefficients f^(m)(a0)/m! for m = 0..k."""
    fact = [math.factorial(m) for m in range(k + 1)]
    if fn == "exp":
        e = np.exp(a0)
        return [e / fact[m] for m in range(k + 1)]
    if fn in ("sin", "cos"):
        s, co = np.sin(a0), np.cos(a0)
        cycle = [s, co, -s, -co] if fn == "sin" else [co, -s, -co, s]
        return [cycle[m % 4] / fact[m] for m in range(k + 1)]
    if fn == "log":
        if np.any(a0 <= 0):
            raise JetError("log requires a positive constant term")
        out = [np.log(a0)]
        for m in range(1, k + 1):
            out.append((-1) ** (m + 1) / (m * a0**m))
        return out
    if fn == "pow":
        assert c is not None
        out = []
        binom = 1.0
        for m in range(k + 1):
            out.append(binom * a0 ** (c - m))
            binom *= (c - m) / (m + 1)
        return out
    raise JetError(f"unknown elementary function {fn!r}")


# ---------------------------------------------------------------------------


class Jet:
    """Scalar jet (optionally a batch of them) in ``n`` variables."""

    __array_priority__ = 1000

    def __init__(self, coeffs: np.ndarray, n: int):
        coeffs = np.asarray(coeffs, dtype=float)
        self.n = n
        self.order = order_from_size(n, coeffs.shape[-1])
        self.coeffs = coeffs

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, n: int, order: int) -> Jet:
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (n_coeffs(n, order),))
        c[..., 0] = value
        return cls(c, n)

    @classmethod
    def variable(cls, axis: int, value, n: int, order: int) -> Jet:
        if not 0 <= axis < n:
            raise JetError(f"axis {axis} out of range for {n} variables")
        out = cls.constant(value, n, order)
        if order >= 1:
            out.coeffs[..., 1 + axis] = 1.0
        return out

    # accessors ----------------------------------------------------------
    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def partial(self, alpha: Sequence[int]):
        return extract_partial(self, alpha)

    def truncated(self, order: int) -> Jet:
        if order > self.order:
            raise JetError(f"cannot raise jet order from {self.order} to {order}")
        return Jet(truncate(self.coeffs, self.n, order), self.n)

    def deriv(self, axis: int) -> Jet:
        return Jet(deriv_coeffs(self.coeffs, self.n, axis), self.n)

    def __repr__(self) -> str:
        return f"Jet(n={self.n}, order={self.order}, value={self.coeffs[..., 0]!r})"

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> Jet:
        if isinstance(other, Jet):
            if other.n != self.n:
                raise JetError(f"jet dimension mismatch: {self.n} vs {other.n}")
            return other
        return Jet.constant(other, self.n, self.order)

    def _align(self, other) -> tuple[np.ndarray, np.ndarray]:
        other = self._coerce(other)
        k = min(self.order, other.order)
        return truncate(self.coeffs, self.n, k), truncate(other.coeffs, self.n, k)

    def __add__(self, other) -> Jet:
        a, b = self._align(other)
        return Jet(a + b, self.n)

    __radd__ = __add__

    def __sub__(self, other) -> Jet:
        a, b = self._align(other)
        return Jet(a - b, self.n)

    def __rsub__(self, other) -> Jet:
        a, b = self._align(other)
        return Jet(b - a, self.n)

    def __neg__(self) -> Jet:
        return Jet(-self.coeffs, self.n)

    def __pos__(self) -> Jet:
        return self

    def __mul__(self, other) -> Jet:
        if not isinstance(other, Jet):
            return Jet(self.coeffs * np.asarray(other, dtype=float)[..., None], self.n)
        a, b = self._align(other)
        return Jet(mul_coeffs(a, b, self.n), self.n)

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet:
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise JetError("division by a jet with zero constant term")
            return Jet(self.coeffs / other[..., None], self.n)
        a, b = self._align(other)
        return Jet(div_coeffs(a, b, self.n), self.n)

    def __rtruediv__(self, other) -> Jet:
        a, b = self._align(other)
        return Jet(div_coeffs(b, a, self.n), self.n)

    def __pow__(self, c) -> Jet:
        if isinstance(c, (int, np.integer)) and c >= 0:
            out = Jet.constant(np.ones(self.batch_shape), self.n, self.order)
            base = self
            e = int(c)
            while e:
                if e & 1:
                    out = out * base
                e >>= 1
                if e:
                    base = base * base
            return out
        return jet_pow(self, float(c))


# ---------------------------------------------------------------------------
# operations


def jet_var(i: int, value: float, n: int, K: int = 5) -> Jet:
    """Coordinate function x_i expanded at ``value``."""
    return Jet.variable(i, value, n, K)


def jet_arith(op: str, a: Jet, b: Jet | None = None) -> Jet:
    if op == "neg":
        return -a
    if b is None:
        raise JetError(f"{op} needs two operands")
    if isinstance(b, Jet) and (a.n != b.n or a.order != b.order):
        raise JetError(f"jets must share (n, K): ({a.n}, {a.order}) vs ({b.n}, {b.order})")
    ops: dict[str, Callable[[Jet, Jet], Jet]] = {
        "add": Jet.__add__,
        "sub": Jet.__sub__,
        "mul": Jet.__mul__,
        "div": Jet.__truediv__,
    }
    if op not in ops:
        raise JetError(f"unknown arithmetic op {op!r}")
    return ops[op](a, b)


def _elementary(fn: str, a: Jet, c: float | None = None) -> Jet:
    series = _outer_series(fn, a.coeffs[..., 0], a.order, c)
    return Jet(compose_coeffs(a.coeffs, a.n, series), a.n)


def jet_pow(a: Jet, c: float) -> Jet:
    if float(c).is_integer() and c >= 0:
        return a ** int(c)
    if np.any(a.coeffs[..., 0] <= 0):
        raise JetError("non-integer power requires a positive constant term")
    return _elementary("pow", a, c)


def jet_elem(fn: str, a: Jet, c: float | None = None) -> Jet:
    if fn == "sqrt":
        if np.any(a.coeffs[..., 0] <= 0):
            raise JetError("sqrt requires a positive constant term")
        return _elementary("pow", a, 0.5)
    if fn == "pow":
        if c is None:
            raise JetError("pow needs an exponent")
        return jet_pow(a, c)
    if fn not in ("sin", "cos", "exp", "log"):
        raise JetError(f"unknown elementary function {fn!r}")
    return _elementary(fn, a)


def extract_partial(a: Jet, alpha: Sequence[int]):
    alpha = tuple(int(x) for x in alpha)
    if len(alpha) != a.n or min(alpha) < 0:
        raise JetError(f"bad multi-index {alpha} for {a.n} variables")
    if sum(alpha) > a.order:
        raise JetError(f"multi-index order {sum(alpha)} exceeds jet order {a.order}")
    i = index_of(alpha)
    v = a.coeffs[..., i] * tables(a.n, a.order).factorials[i]
    return float(v) if np.ndim(v) == 0 else v


# Dispatching elementary functions: metric components are written once and
# evaluated either on jets or on plain (possibly longdouble) arrays.


def _dispatch(fn: str, npfn):
    def f(x):
        if isinstance(x, Jet):
            return jet_elem(fn, x)
        return npfn(x)

    f.__name__ = fn
    return f


sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
exp = _dispatch("exp", np.exp)
sqrt = _dispatch("sqrt", np.sqrt)
log = _dispatch("log", np.log)
