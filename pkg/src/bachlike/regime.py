"""Classification of the (alpha, beta) plane for alpha U + beta V = 0.

The predicate is evaluated in exact rational arithmetic.  Floats are read as
the nearest fraction with denominator at most ``MAX_DENOMINATOR``, so that
``1/6`` typed as ``0.16666666666666666`` still lands on the Bach line; strings
such as ``"1/6"`` are parsed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

V_ONLY = "V-ONLY"
BACH_LINE = "BACH-LINE"
LAMBDA = "LAMBDA"
OPEN = "OPEN"
REGIMES = (V_ONLY, BACH_LINE, LAMBDA, OPEN)

CONCLUSIONS = {
    LAMBDA: "Einstein or Gaussian soliton",
    V_ONLY: "Einstein or Gaussian soliton",
    BACH_LINE: "Einstein, or finite quotient of Gaussian R^4 or round cylinder S^3xR",
    OPEN: "no classification known (conjectured for pure U)",
}

MAX_DENOMINATOR = 10**6


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(float(x)).limit_denominator(MAX_DENOMINATOR)


def in_lambda(alpha, beta) -> bool:
    a, b = as_fraction(alpha), as_fraction(beta)
    return (a >= 0 and b > a / 3) or (a <= 0 and b < a / 3)


@dataclass(frozen=True)
class RegimeVerdict:
    alpha: float
    beta: float
    regime: str
    conclusion: str
    in_lambda: bool

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "regime": self.regime,
                "conclusion": self.conclusion, "in_lambda": self.in_lambda}


def classify_regime(alpha, beta) -> RegimeVerdict:
    a, b = as_fraction(alpha), as_fraction(beta)
    lam = in_lambda(a, b)
    if a == 0 and b == 0:
        regime = OPEN  # the zero tensor says nothing
    elif a != 0 and b == a / 3:
        regime = BACH_LINE
    elif a == 0:
        regime = V_ONLY
    elif lam:
        regime = LAMBDA
    else:
        regime = OPEN
    return RegimeVerdict(float(a), float(b), regime, CONCLUSIONS[regime], lam)


def grid_values(lo: float, hi: float, step: float) -> list[Fraction]:
    lo_f, hi_f, st = as_fraction(lo), as_fraction(hi), as_fraction(step)
    if st <= 0 or hi_f < lo_f:
        raise ValueError("grid needs step > 0 and hi >= lo")
    count = int((hi_f - lo_f) / st)
    return [lo_f + k * st for k in range(count + 1)]


def regime_grid(lo: float = -1.0, hi: float = 1.0, step: float = 0.25) -> list[RegimeVerdict]:
    """Row-major over alpha, then beta."""
    vals = grid_values(lo, hi, step)
    return [classify_regime(a, b) for a in vals for b in vals]
