"""Result records shared by the identity suite, the lemma checks and the CLI."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED-HYPOTHESIS"
NOT_APPLICABLE = "NOT-APPLICABLE"
LOW_ACCURACY = "LOW-ACCURACY"
VERDICTS = (PASS, FAIL, SKIPPED, NOT_APPLICABLE, LOW_ACCURACY)


@dataclass(frozen=True)
class IdentityReport:
    id: str
    anchor: str
    geometry: str
    samples: int
    max_residual: float
    tolerance: float
    verdict: str

    def to_json(self, digits: int = 6) -> dict:
        d = asdict(self)
        d["max_residual"] = round_sig(self.max_residual, digits)
        d["tolerance"] = round_sig(self.tolerance, digits)
        return d


def round_sig(x: float, digits: int = 6):
    """Round to significant digits so reports are stable across BLAS paths."""
    if x is None or not math.isfinite(x):
        return None if x is None else str(x)
    if x == 0:
        return 0.0
    return float(f"{x:.{digits - 1}e}")


def verdict_for(residual: float, tolerance: float) -> str:
    return PASS if math.isfinite(residual) and residual <= tolerance else FAIL
