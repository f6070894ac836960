"""Runs manifest-selected checks and assembles the JSON report."""

from __future__ import annotations

import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .fields import PointContext
from .geometry import sample_points
from .identities import check_identity, pointwise_identity
from .lemmas import resolve_lemma, verify_lemma
from .geometry import RandomMetricSpec, random_metric
from .manifest import Manifest, load_manifest
from .quadrature import QuadratureError
from .regime import BACH_LINE, regime_grid
from .report import FAIL, NOT_APPLICABLE, PASS, VERDICTS, IdentityReport, round_sig

SCHEMA = "v1"
BACH_LINE_TOL = 1e-9


def _pointwise_reports(m: Manifest, geom, ids: list[str]) -> list[IdentityReport]:
    if not ids:
        return []
    chart = geom.params.get("pointwise_chart", 0)
    ctx = PointContext(geom, sample_points(geom, m.samples, m.seed, chart), m.jet_order, chart)
    out = []
    for i in ids:
        rep = check_identity(i, geom, order=m.jet_order, alpha=m.alpha, beta=m.beta,
                             tol=m.pointwise_tolerance, ctx=ctx)
        out.append(rep)
    return out


def _lemma_reports(m: Manifest, geom, ids: list[str]) -> list[IdentityReport]:
    out = []
    for lemma_id in ids:
        try:
            res = verify_lemma(lemma_id, geom, r=m.level(geom.name), q=m.q, alpha=m.alpha, beta=m.beta,
                               rel_tol=m.integral_rel_tol, abs_tol=m.integral_abs_tol,
                               tail_tol=m.tail_tolerance, seed=m.seed)
            out.append(res.report)
        except QuadratureError:
            # no sublevel-set parameterization for this geometry (e.g. a random metric with f)
            lemma = resolve_lemma(lemma_id)
            out.append(IdentityReport(lemma.id, lemma.anchor, geom.name, 0, 0.0, m.integral_abs_tol, NOT_APPLICABLE))
    return out


def run_identity_suite(m: Manifest) -> list[IdentityReport]:
    """All selected checks, geometry by geometry in manifest order, ids in selection order.

    Catalog value checks bound to a different geometry are dropped rather
    than reported as NOT-APPLICABLE noise.
    """
    reports = []
    for name in m.geometries:
        geom = m.geometry(name)
        pw, lem = m.expanded(name)
        for rep in _pointwise_reports(m, geom, pw):
            if rep.verdict == NOT_APPLICABLE and rep.id.startswith("C-"):
                continue
            reports.append(rep)
        reports.extend(_lemma_reports(m, geom, lem))
    return reports


def bach_line_checks(m: Manifest) -> list[dict]:
    """alpha U + (alpha/3) V - 2 alpha B on random metric points, one row per bach-line alpha of the grid."""
    r = m.random
    geom = random_metric(RandomMetricSpec(seed=r.seed, dim=4, epsilon=r.epsilon, degree=r.degree))
    ctx = PointContext(geom, sample_points(geom, m.bach_line_samples, m.seed), 4)
    rows = []
    for v in regime_grid(*m.grid):
        if v.regime != BACH_LINE or v.alpha in [r["alpha"] for r in rows]:
            continue
        res = float(pointwise_identity("P-BACH-LINE", ctx, alpha=v.alpha).max())
        rows.append({"alpha": v.alpha, "beta": v.beta, "max_residual": round_sig(res, m.digits),
                     "tolerance": BACH_LINE_TOL, "verdict": PASS if res <= BACH_LINE_TOL else FAIL})
    return rows


def _metadata(m: Manifest) -> dict:
    return {
        "manifest": m.source,
        "seed": m.seed,
        "jet_order": m.jet_order,
        "q": m.q,
        "samples": m.samples,
        "geometries": list(m.geometries),
        "random_metric": {"seed": m.random.seed, "epsilon": m.random.epsilon, "degree": m.random.degree},
        "alpha": m.alpha,
        "beta": m.beta,
        "versions": {"bachlike": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }


def summarize(reports: list[IdentityReport]) -> dict:
    return {v: sum(r.verdict == v for r in reports) for v in VERDICTS}


def exit_code(verdicts) -> int:
    return 1 if FAIL in verdicts else 0


def suite_report(m: Manifest) -> dict:
    reports = run_identity_suite(m)
    doc = {
        "schema": SCHEMA,
        "run": _metadata(m),
        "identities": [r.to_json(m.digits) for r in reports],
        "summary": summarize(reports),
    }
    verdicts = [r.verdict for r in reports]
    if m.include_grid:
        grid = grid_report(m)
        doc["regime_grid"] = grid["regime_grid"]
        doc["bach_line"] = grid["bach_line"]
        verdicts += [row["verdict"] for row in grid["bach_line"]]
    doc["exit_code"] = exit_code(verdicts)
    return doc


def grid_report(m: Manifest) -> dict:
    grid = [v.to_json() for v in regime_grid(*m.grid)]
    rows = bach_line_checks(m)
    doc = {"schema": SCHEMA, "run": _metadata(m), "regime_grid": grid, "bach_line": rows}
    doc["exit_code"] = exit_code([r["verdict"] for r in rows])
    return doc


def dumps(doc: dict) -> str:
    """Canonical text form: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(doc: dict, path: str | None) -> str:
    text = dumps(doc)
    if path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return text


def run_manifest(path, environ=None, **flags) -> tuple[dict, int]:
    """Loads a manifest, runs the suite, writes the report; returns (report, exit code)."""
    m = load_manifest(path, environ, **flags)
    doc = suite_report(m)
    write_report(doc, m.out)
    return doc, doc["exit_code"]
