import math

import pytest

from bachlike.geometry import RandomMetricSpec, random_metric
from bachlike.lemmas import CORE_LEMMAS, LEMMAS, decay_probe, resolve_lemma, verify_lemma
from bachlike.report import NOT_APPLICABLE, PASS, SKIPPED

PI2 = math.pi**2
REGION_LEMMAS = [i for i in CORE_LEMMAS if not LEMMAS[i].whole_manifold]


@pytest.mark.parametrize("lemma_id", REGION_LEMMAS)
@pytest.mark.parametrize("name,r", [("GAUSS", 4.0), ("CYL", 5.0)])
def test_region_lemmas_pass(catalog, lemma_id, name, r):
    out = verify_lemma(lemma_id, catalog[name], r=r, q=16)
    assert out.report.verdict == PASS, out


def test_cylinder_l4_closed_form(catalog):
    """V(grad f, grad f) = -9/16 t^2/4 on S^3(2) x R, integrated over |t| <= h."""
    h = 2 * math.sqrt(3.5)
    exact = -9 / 16 * 16 * PI2 * h**3 / 6
    out = verify_lemma("L4", catalog["CYL"], r=5.0, q=16)
    assert out.lhs[0] == pytest.approx(exact, rel=1e-10)
    assert out.rhs[0] == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("lemma_id", ["L-VW", "L13", "L10"])
def test_closed_manifold(catalog, lemma_id):
    out = verify_lemma(lemma_id, catalog["S4"], q=8)
    assert out.report.verdict == PASS
    assert max(abs(v) for v in out.lhs + out.rhs) < 1e-10


def test_hypotheses_gate(catalog):
    assert verify_lemma("L4", catalog["E4"]).report.verdict == SKIPPED
    randf = random_metric(RandomMetricSpec(seed=1, with_f=True))
    out = verify_lemma("L3.1", randf)
    assert out.report.verdict == SKIPPED and "soliton" in out.hypothesis.reason


def test_bach_like_gate_still_reports_values(catalog):
    """On the cylinder alpha U + beta V vanishes only on the Bach line, where L11 degenerates."""
    out = verify_lemma("L11", catalog["CYL"], r=5.0, q=8, alpha=1.0, beta=1.0)
    assert out.report.verdict == NOT_APPLICABLE
    assert out.hypothesis.gate_only and out.lhs
    line = verify_lemma("L11", catalog["CYL"], r=5.0, q=8, alpha=3.0, beta=1.0)
    assert line.report.verdict == NOT_APPLICABLE and "3 beta - alpha" in line.hypothesis.reason


def test_aliases():
    assert resolve_lemma("l12").id == "L11"
    assert resolve_lemma("L3(2)").id == "L3.2"
    with pytest.raises(KeyError):
        resolve_lemma("L99")


def test_decay_probe(catalog):
    """e^{-r} times a polynomially growing integral decays; on S4 it is identically zero."""
    vals = [v for _, v in decay_probe(catalog["CYL"], 1.0, [4.0, 8.0, 12.0], q=8)]
    assert all(v >= 0 for v in vals)
    assert [v for _, v in decay_probe(catalog["S4"], 1.0, [3.0], q=4)] == [pytest.approx(0.0, abs=1e-12)]
    with pytest.raises(ValueError):
        decay_probe(catalog["CYL"], 0.0, [4.0])
