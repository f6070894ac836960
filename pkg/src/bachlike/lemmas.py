"""Integral identities over sublevel sets and over the whole soliton.

Each lemma is a list of integrals (volume or boundary, weighted or not) that
share a single curvature evaluation, followed by a function that turns the
integral values into left and right sides.  Hypotheses are checked at sample
points before anything is integrated: the soliton equation always, plus a
harmonic scalar curvature for the identities derived under that assumption.

Two of the stated identities are implemented in corrected form (see the
docstrings of ``_l11`` and ``_l14``); the uncorrected raw identities with the
bach-like tensor on the left are available as ``L11-RAW`` and ``L14-RAW`` and
hold for every (alpha, beta) on catalog solitons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import PointContext
from .geometry import GeometrySpec, sample_points
from .quadrature import (
    DEFAULT_Q,
    Integrand,
    QuadratureError,
    integrate_boundary,
    integrate_manifold,
    integrate_region,
    make_region,
)
from .report import FAIL, LOW_ACCURACY, NOT_APPLICABLE, PASS, SKIPPED, IdentityReport
from .tensors import max_abs

HYPOTHESIS_TOL = 1e-8
HYPOTHESIS_SAMPLES = 16


# ---------------------------------------------------------------------------
# integrands: each maps a PointContext to one value per point


def _gf_norm(c: PointContext) -> np.ndarray:
    return np.sqrt(c.grad_f_norm2)


INTEGRANDS: dict[str, Callable[[PointContext], np.ndarray]] = {
    "gRgf": lambda c: c.grad_R_dot_grad_f,
    "gRgf/|gf|": lambda c: c.grad_R_dot_grad_f / _gf_norm(c),
    "R gRgf/|gf|": lambda c: c.R * c.grad_R_dot_grad_f / _gf_norm(c),
    "|gf| gRgf": lambda c: _gf_norm(c) * c.grad_R_dot_grad_f,
    "|gR|^2": lambda c: c.grad_R_norm2,
    "R Rc(gf,gf)": lambda c: c.R * c.ricci_ff,
    "f gRgf": lambda c: c.f_value * c.grad_R_dot_grad_f,
    "V(gf,gf)": lambda c: c.form_ff(c.V),
    "U(gf,gf)": lambda c: c.form_ff(c.U),
    "B(gf,gf)": lambda c: c.form_ff(c.B),
    "square": lambda c: 0.5 * (c.completed_square - 0.75 * c.R**2 * c.grad_f_norm2),
    "HessR(gf,gf)": lambda c: c.form_ff(c.hess_R),
    "R^2|gf|^2": lambda c: c.R**2 * c.grad_f_norm2,
    "|Rc|^2|gf|^2": lambda c: c.ricci_norm2 * c.grad_f_norm2,
    "U-rhs": lambda c: 0.25 * c.grad_f_norm2 * (c.R**2 - 2.0 * c.ricci_norm2),
    "|D|^2": lambda c: c.D_norm2,
}


@dataclass(frozen=True)
class Term:
    integrand: str
    boundary: bool = False
    weighted: bool = False


def _bl_ff(alpha: float, beta: float):
    return lambda c: c.form_ff(c.bach_like(alpha, beta))


# ---------------------------------------------------------------------------
# lemma table


@dataclass(frozen=True)
class Lemma:
    id: str
    anchor: str
    terms: tuple[Term, ...]
    sides: Callable  # (values, ctx) -> (list of lhs, list of rhs)
    harmonic_R: bool = False
    whole_manifold: bool = False
    gate: str | None = None  # "bach-like": requires alpha U + beta V = 0
    uses_params: bool = False


@dataclass(frozen=True)
class SideContext:
    r: float | None
    closed: bool
    alpha: float
    beta: float


def _zero(v, s):
    return [v[0]], [0.0]


def _l3_3(v, s):
    return [v[0], v[0]], [v[1], -v[2]]


def _l3_5(v, s):
    return [v[0]], [0.5 * v[1] + 0.5 * v[2]]


def _l4(v, s):
    return [v[0]], [v[1]]


def _l5(v, s):
    # the e^{-r} term is the boundary flux; a closed manifold has none
    edge = 0.0 if s.closed else math.exp(-s.r) * v[1]
    return [v[0]], [-edge + 0.5 * v[2]]


def _lvw(v, s):
    return [v[0]], [-0.25 * v[1]]


def _l9(v, s):
    return [v[0]], [v[1]]


def _l13(v, s):
    return [v[0]], [-0.5 * v[1]]


def _l11(v, s):
    """(alpha - beta)|grad f|^2 R^2 - 2 alpha |Rc|^2 |grad f|^2 integrates to zero.

    The |grad f|^2 factor on the |Rc|^2 term is required by the derivation
    (weighted U identity combined with the weighted V identity).
    """
    a, b = s.alpha, s.beta
    return [(a - b) * v[0] - 2.0 * a * v[1]], [0.0]


def _l14(v, s):
    """-alpha int |D|^2 e^{-f} - (beta - alpha/3)/4 int R^2 |grad f|^2 e^{-f} = 0.

    The 1/4 comes from the weighted V identity (V integrates to -R^2|grad f|^2/4).
    """
    a, b = s.alpha, s.beta
    return [-a * v[0] - 0.25 * (b - a / 3.0) * v[1]], [0.0]


def _l11_raw(v, s):
    a, b = s.alpha, s.beta
    return [v[0]], [0.25 * ((a - b) * v[1] - 2.0 * a * v[2])]


def _l14_raw(v, s):
    a, b = s.alpha, s.beta
    return [v[0]], [-a * v[1] - 0.25 * (b - a / 3.0) * v[2]]


LEMMAS: dict[str, Lemma] = {}


def _add(lemma: Lemma) -> None:
    LEMMAS[lemma.id] = lemma


_add(Lemma("L3.1", "int_dOmega <grad R, grad f>/|grad f| dS = 0",
           (Term("gRgf/|gf|", boundary=True),), _zero, harmonic_R=True))
_add(Lemma("L3.2", "int_Omega <grad R, grad f> dV = 0", (Term("gRgf"),), _zero, harmonic_R=True))
_add(Lemma("L3.3", "int_Omega |grad R|^2 dV = int_dOmega R<grad R, grad f>/|grad f| dS "
           "= -int_dOmega |grad f|<grad R, grad f> dS",
           (Term("|gR|^2"), Term("R gRgf/|gf|", boundary=True), Term("|gf| gRgf", boundary=True)),
           _l3_3, harmonic_R=True))
_add(Lemma("L3.4", "int_Omega <grad R, grad f> e^{-f} dV = 0", (Term("gRgf", weighted=True),), _zero,
           harmonic_R=True))
_add(Lemma("L3.5", "int_Omega R Rc(grad f, grad f) e^{-f} dV = 1/2 int_dOmega |grad f|<grad R, grad f> e^{-f} dS "
           "+ 1/2 int_Omega |grad R|^2 e^{-f} dV",
           (Term("R Rc(gf,gf)", weighted=True), Term("|gf| gRgf", boundary=True, weighted=True),
            Term("|gR|^2", weighted=True)), _l3_5, harmonic_R=True))
_add(Lemma("L3.6", "int_Omega f <grad R, grad f> e^{-f} dV = 0", (Term("f gRgf", weighted=True),), _zero,
           harmonic_R=True))
_add(Lemma("L4", "int_Omega V(grad f, grad f) dV = 1/2 int_Omega (|grad R - (R/2) grad f|^2 "
           "- 3/4 R^2 |grad f|^2) dV", (Term("V(gf,gf)"), Term("square")), _l4, harmonic_R=True))
_add(Lemma("L5", "int_Omega Hess R(grad f, grad f) e^{-f} dV = -e^{-r} int_Omega |grad R|^2 dV "
           "+ 1/2 int_Omega |grad R|^2 e^{-f} dV",
           (Term("HessR(gf,gf)", weighted=True), Term("|gR|^2"), Term("|gR|^2", weighted=True)), _l5,
           harmonic_R=True))
_add(Lemma("L-VW", "int_M V(grad f, grad f) e^{-f} dV = -1/4 int_M R^2 |grad f|^2 e^{-f} dV",
           (Term("V(gf,gf)", weighted=True), Term("R^2|gf|^2", weighted=True)), _lvw, whole_manifold=True))
_add(Lemma("L9", "int_Omega U(grad f, grad f) dV = 1/4 int_Omega |grad f|^2 (R^2 - 2|Rc|^2) dV",
           (Term("U(gf,gf)"), Term("U-rhs")), _l9, harmonic_R=True))
_add(Lemma("L10", "int_M U(grad f, grad f) e^{-f} dV = 1/4 int_M |grad f|^2 (R^2 - 2|Rc|^2) e^{-f} dV",
           (Term("U(gf,gf)", weighted=True), Term("U-rhs", weighted=True)), _l9, harmonic_R=True,
           whole_manifold=True))
_add(Lemma("L13", "int_M B(grad f, grad f) e^{-f} dV = -1/2 int_M |D|^2 e^{-f} dV",
           (Term("B(gf,gf)", weighted=True), Term("|D|^2", weighted=True)), _l13, whole_manifold=True))
_add(Lemma("L11", "int_M ((alpha - beta) R^2 - 2 alpha |Rc|^2) |grad f|^2 e^{-f} dV = 0 when alpha U + beta V = 0",
           (Term("R^2|gf|^2", weighted=True), Term("|Rc|^2|gf|^2", weighted=True)), _l11,
           whole_manifold=True, gate="bach-like", uses_params=True))
_add(Lemma("L14", "-alpha int_M |D|^2 e^{-f} dV - 1/4 (beta - alpha/3) int_M R^2 |grad f|^2 e^{-f} dV = 0 "
           "when alpha U + beta V = 0",
           (Term("|D|^2", weighted=True), Term("R^2|gf|^2", weighted=True)), _l14,
           whole_manifold=True, gate="bach-like", uses_params=True))
_add(Lemma("L11-RAW", "int_M BL(grad f, grad f) e^{-f} dV = 1/4 int_M ((alpha - beta) R^2 - 2 alpha |Rc|^2) "
           "|grad f|^2 e^{-f} dV",
           (Term("bach-like", weighted=True), Term("R^2|gf|^2", weighted=True),
            Term("|Rc|^2|gf|^2", weighted=True)), _l11_raw, harmonic_R=True, whole_manifold=True,
           uses_params=True))
_add(Lemma("L14-RAW", "int_M BL(grad f, grad f) e^{-f} dV = -alpha int_M |D|^2 e^{-f} dV "
           "- 1/4 (beta - alpha/3) int_M R^2 |grad f|^2 e^{-f} dV",
           (Term("bach-like", weighted=True), Term("|D|^2", weighted=True), Term("R^2|gf|^2", weighted=True)),
           _l14_raw, whole_manifold=True, uses_params=True))

ALIASES = {"L12": "L11", "L3(1)": "L3.1", "L3(2)": "L3.2", "L3(3)": "L3.3", "L3(4)": "L3.4", "L3(5)": "L3.5",
           "L3(6)": "L3.6", "LVW": "L-VW"}
CORE_LEMMAS = ("L3.1", "L3.2", "L3.3", "L3.4", "L3.5", "L3.6", "L4", "L5", "L-VW", "L9", "L10", "L13")
LEMMA_ORDER = 4  # U, V and Hess R need fourth metric derivatives


def resolve_lemma(lemma_id: str) -> Lemma:
    key = ALIASES.get(lemma_id.upper(), lemma_id.upper())
    if key not in LEMMAS:
        raise KeyError(f"unknown lemma id {lemma_id!r}")
    return LEMMAS[key]


# ---------------------------------------------------------------------------
# hypotheses


@dataclass(frozen=True)
class HypothesisCheck:
    ok: bool
    reason: str = ""
    gate_only: bool = False  # only the bach-like gate failed
    soliton: float = 0.0
    laplacian_R: float = 0.0
    bach_like: float = 0.0


def check_hypotheses(geom: GeometrySpec, lemma: Lemma, alpha: float = 1.0, beta: float = 1.0,
                     seed: int = 0, samples: int = HYPOTHESIS_SAMPLES) -> HypothesisCheck:
    if not geom.has_potential:
        return HypothesisCheck(False, "geometry has no potential f")
    chart = geom.params.get("pointwise_chart", 0)  # angle charts lose digits near their poles
    ctx = PointContext(geom, sample_points(geom, samples, seed, chart), LEMMA_ORDER, chart)
    sol = ctx.soliton
    soliton = float(max(max_abs(sol.soliton_residual).max(), np.abs(sol.normalization_residual.value).max()))
    if soliton > HYPOTHESIS_TOL:
        return HypothesisCheck(False, f"soliton residual {soliton:.2e}", soliton=soliton)
    lap = float(np.abs(ctx.lap_R_value).max())
    if lemma.harmonic_R and lap > HYPOTHESIS_TOL:
        return HypothesisCheck(False, f"Delta R = {lap:.2e} is not zero", soliton=soliton, laplacian_R=lap)
    bl = 0.0
    if lemma.gate == "bach-like":
        bl = float((max_abs(ctx.bach_like(alpha, beta)) / ctx.scale).max())
        if bl > HYPOTHESIS_TOL:
            return HypothesisCheck(False, f"alpha U + beta V = {bl:.2e} is not zero", True, soliton, lap, bl)
        if lemma.id == "L11" and 3.0 * beta - alpha == 0:
            return HypothesisCheck(False, "3 beta - alpha = 0", True, soliton, lap, bl)
    return HypothesisCheck(True, "", False, soliton, lap, bl)


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class LemmaOutcome:
    report: IdentityReport
    lhs: list
    rhs: list
    refinement: float
    r: float | None
    hypothesis: HypothesisCheck
    tail: float = 0.0
    extra: dict = field(default_factory=dict)


def _stack_fn(names: list[str], alpha: float, beta: float):
    fns = [(_bl_ff(alpha, beta) if n == "bach-like" else INTEGRANDS[n]) for n in names]
    return lambda c: np.stack([np.broadcast_to(fn(c), (len(c),)) for fn in fns], axis=-1)


def _integrate_terms(geom, lemma: Lemma, r, q, alpha, beta, tail_tol):
    """Values of every term, grouped so each group costs one curvature pass."""
    groups: dict[tuple[bool, bool], list[int]] = {}
    for i, t in enumerate(lemma.terms):
        groups.setdefault((t.boundary, t.weighted), []).append(i)
    values = [0.0] * len(lemma.terms)
    refinement = 0.0
    tail = 0.0
    r_used = r
    closed = geom.closed
    for (boundary, weighted), idx in groups.items():
        integrand = Integrand(_stack_fn([lemma.terms[i].integrand for i in idx], alpha, beta), LEMMA_ORDER)
        if lemma.whole_manifold:
            if boundary:
                raise QuadratureError("whole-manifold lemmas have no boundary terms")
            mi = integrate_manifold(geom, integrand, weighted, q, tail_tol)
            res, tail, r_used = mi.result, max(tail, mi.tail), mi.r
        else:
            region = make_region(geom, r, q)
            res = (integrate_boundary if boundary else integrate_region)(region, integrand, weighted)
        vals = np.broadcast_to(np.asarray(res.value, dtype=float), (len(idx),))  # closed boundary is a bare 0
        for k, i in enumerate(idx):
            values[i] = float(vals[k])
        refinement = max(refinement, float(np.max(res.refinement)))
    return values, refinement, tail, r_used, closed


def verify_lemma(lemma_id: str, geometry: GeometrySpec, r: float | None = 5.0, q: int = DEFAULT_Q,
                 alpha: float = 1.0, beta: float = 1.0, rel_tol: float = 1e-6, abs_tol: float = 1e-8,
                 tail_tol: float = 1e-8, seed: int = 0) -> LemmaOutcome:
    lemma = resolve_lemma(lemma_id)
    hyp = check_hypotheses(geometry, lemma, alpha, beta, seed)
    tol = abs_tol
    if not hyp.ok and not hyp.gate_only:
        rep = IdentityReport(lemma.id, lemma.anchor, geometry.name, 0, 0.0, tol, SKIPPED)
        return LemmaOutcome(rep, [], [], 0.0, r, hyp)
    if not geometry.closed and not lemma.whole_manifold:
        make_region(geometry, r, q)  # raises on empty or out-of-chart levels
    values, refinement, tail, r_used, closed = _integrate_terms(geometry, lemma, r, q, alpha, beta, tail_tol)
    lhs, rhs = lemma.sides(values, SideContext(r_used, closed, alpha, beta))
    residual = max(abs(a - b) for a, b in zip(lhs, rhs))
    magnitude = max(max(abs(a), abs(b)) for a, b in zip(lhs, rhs))
    tol = max(rel_tol * magnitude, abs_tol)
    if not hyp.ok:
        verdict = NOT_APPLICABLE
    elif not math.isfinite(tail) or tail > tail_tol:
        verdict = LOW_ACCURACY  # exhaustion ran out of chart before the tail settled
    elif not geometry.closed and make_region(geometry, r_used, q).low_accuracy:
        verdict = LOW_ACCURACY
    else:
        verdict = PASS if residual <= tol else FAIL
    nodes = q ** geometry.dim
    rep = IdentityReport(lemma.id, lemma.anchor, geometry.name, nodes, residual, tol, verdict)
    return LemmaOutcome(rep, lhs, rhs, refinement, r_used, hyp, tail, {"values": values})


# ---------------------------------------------------------------------------
# decay probe


def decay_probe(geometry: GeometrySpec, alpha: float, rs, q: int = DEFAULT_Q) -> list[tuple[float, float]]:
    """(r, e^{-alpha r} int_{Omega_r} |grad R|^2 dV) for each level r."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    out = []
    integrand = Integrand(INTEGRANDS["|gR|^2"], order=3)
    for r in rs:
        region = make_region(geometry, None if geometry.closed else r, q)
        val = integrate_region(region, integrand).value
        out.append((float(r), float(math.exp(-alpha * r) * val)))
    return out
