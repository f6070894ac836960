"""Finite-difference curvature pipeline used as an independent oracle.

Every derivative is a central difference ``(F(x + h e_k) - F(x - h e_k)) / 2h``
applied to the previous stage, evaluated on the integer lattice
``x0 + h * m``.  Stages are memoized per lattice point, so nesting four
differences (as the Bach tensor requires) touches only a few hundred metric
evaluations.  Arithmetic is carried out in ``np.longdouble``: with
``h = 1e-3`` four nested differences amplify rounding by ~1e12, which float64
cannot absorb.

Nothing here touches jets; the only shared inputs are the metric callables.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .geometry import GeometrySpec, metric_values

LD = np.longdouble
_L = "abcdefgh"


def _inverse(a: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting (numpy.linalg lacks longdouble)."""
    n = a.shape[0]
    m = np.concatenate([a.astype(LD), np.eye(n, dtype=LD)], axis=1)
    for c in range(n):
        p = c + int(np.argmax(np.abs(m[c:, c])))
        if p != c:
            m[[c, p]] = m[[p, c]]
        m[c] = m[c] / m[c, c]
        for r in range(n):
            if r != c:
                m[r] = m[r] - m[r, c] * m[c]
    return m[:, n:]


class FiniteDifferencePipeline:
    def __init__(self, geom: GeometrySpec, point, h: float = 1e-3, chart: int = 0):
        self.geom = geom
        self.n = geom.dim
        self.x0 = np.asarray(point, dtype=LD)
        self.h = LD(h)
        self.chart = chart
        self._cache: dict[tuple[str, tuple[int, ...]], np.ndarray] = {}
        self._fields: dict[str, tuple[Callable, str]] = {
            "g": (self._g, "dd"),
            "ginv": (self._ginv, "uu"),
            "gam": (self._gam, "udd"),
            "riem": (self._riem, "dddu"),
            "rm": (self._rm, "dddd"),
            "rc": (self._rc, "dd"),
            "R": (self._R, ""),
            "W": (self._W, "dddd"),
            "dR": (lambda m: self.grad("R", m), "d"),
            "nrc": (lambda m: self.cov("rc", m), "ddd"),
            "E": (self._E, "ddd"),
        }

    # lattice plumbing -----------------------------------------------------
    def get(self, name: str, m=None) -> np.ndarray:
        m = tuple([0] * self.n) if m is None else tuple(m)
        key = (name, m)
        if key not in self._cache:
            self._cache[key] = self._fields[name][0](m)
        return self._cache[key]

    def _shift(self, m, k, s):
        m = list(m)
        m[k] += s
        return tuple(m)

    def grad(self, name: str, m) -> np.ndarray:
        """Central-difference gradient, derivative index first."""
        return np.stack(
            [(self.get(name, self._shift(m, k, 1)) - self.get(name, self._shift(m, k, -1))) / (2 * self.h)
             for k in range(self.n)]
        )

    def cov(self, name: str, m) -> np.ndarray:
        variance = self._fields[name][1]
        t = self.get(name, m)
        gam = self.get("gam", m)
        out = self.grad(name, m)
        letters = _L[: len(variance)]
        for s, v in enumerate(variance):
            a = letters[s]
            tin = letters.replace(a, "w")
            if v == "d":
                out = out - np.einsum(f"wx{a},{tin}->x{letters}", gam, t)
            else:
                out = out + np.einsum(f"{a}xw,{tin}->x{letters}", gam, t)
        return out

    # stages ---------------------------------------------------------------
    def _g(self, m):
        x = self.x0 + self.h * np.array(m, dtype=LD)
        return metric_values(self.geom, x, self.chart)

    def _ginv(self, m):
        return _inverse(self.get("g", m))

    def _gam(self, m):
        dg = self.grad("g", m)  # [l, i, j]
        first = 0.5 * (np.einsum("ijl->ijl", dg) + np.einsum("jil->ijl", dg) - np.einsum("lij->ijl", dg))
        return np.einsum("kl,ijl->kij", self.get("ginv", m), first)

    def _riem(self, m):
        gam = self.get("gam", m)
        dgam = self.grad("gam", m)  # [i, l, j, k]
        return (
            np.einsum("iljk->ijkl", dgam)
            - np.einsum("jlik->ijkl", dgam)
            + np.einsum("pjk,lip->ijkl", gam, gam)
            - np.einsum("pik,ljp->ijkl", gam, gam)
        )

    def _rm(self, m):
        return np.einsum("kp,ijlp->ijkl", self.get("g", m), self.get("riem", m))

    def _rc(self, m):
        rc = np.einsum("ijki->jk", self.get("riem", m))
        return 0.5 * (rc + rc.T)

    def _R(self, m):
        return np.einsum("jk,jk->", self.get("ginv", m), self.get("rc", m))

    def _W(self, m):
        n = self.n
        g, rc, R = self.get("g", m), self.get("rc", m), self.get("R", m)
        gr = (np.einsum("ik,jl->ijkl", g, rc) - np.einsum("il,jk->ijkl", g, rc)
              - np.einsum("jk,il->ijkl", g, rc) + np.einsum("jl,ik->ijkl", g, rc))
        gg = np.einsum("ik,jl->ijkl", g, g) - np.einsum("il,jk->ijkl", g, g)
        return self.get("rm", m) - gr / (n - 2) + R * gg / ((n - 1) * (n - 2))

    def _E(self, m):
        dW = self.cov("W", m)
        return np.einsum("bl,bikjl->ikj", self.get("ginv", m), dW)

    # results at the base point --------------------------------------------
    def riemann(self) -> np.ndarray:
        return self.get("rm")

    def ricci(self) -> np.ndarray:
        return self.get("rc")

    def scalar(self):
        return self.get("R")

    def bach(self) -> np.ndarray:
        """Four-dimensional Bach tensor (general-n coefficients)."""
        n = self.n
        gi = self.get("ginv")
        rc_up = gi @ self.get("rc") @ gi
        t1 = np.einsum("ak,aikj->ij", gi, self.cov("E", tuple([0] * n)))
        t2 = np.einsum("kl,ikjl->ij", rc_up, self.get("W"))
        return t1 / (n - 3) + t2 / (n - 2)

    def _pieces(self):
        n = self.n
        g, gi = self.get("g"), self.get("ginv")
        rc, R = self.get("rc"), self.get("R")
        rc_up = gi @ rc @ gi
        zero = tuple([0] * n)
        hessR = self.cov("dR", zero)
        hessR = 0.5 * (hessR + hessR.T)
        lapR = np.einsum("ij,ij->", gi, hessR)
        lap_rc = np.einsum("kl,klij->ij", gi, self.cov("nrc", zero))
        lap_rc = 0.5 * (lap_rc + lap_rc.T)
        rc2 = np.einsum("ij,ij->", rc, rc_up)
        rmrc = np.einsum("ipjq,pq->ij", self.get("rm"), rc_up)
        return g, rc, R, rc2, rmrc, lap_rc, hessR, lapR

    def U(self) -> np.ndarray:
        g, rc, R, rc2, rmrc, lap_rc, _, lapR = self._pieces()
        c = self.n - 3
        u = c * (2 * rmrc + lap_rc - 0.5 * rc2 * g - R * rc - 0.5 * lapR * g + 0.25 * R * R * g)
        return 0.5 * (u + u.T)

    def V(self) -> np.ndarray:
        g, rc, R, _, _, _, hessR, lapR = self._pieces()
        return -hessR + lapR * g + R * rc - 0.25 * R * R * g


class RichardsonOracle:
    """Combines the pipelines at steps h and 2h as (4 F(h) - F(2h)) / 3.

    Nested central differences carry an error expansion in even powers of h;
    at h = 1e-3 the h^2 term alone is ~1e-5 relative for fourth-derivative
    quantities, so one extrapolation step is needed for a 1e-5 comparison.
    """

    def __init__(self, geom: GeometrySpec, point, h: float = 1e-3, chart: int = 0):
        self.fine = FiniteDifferencePipeline(geom, point, h, chart)
        self.coarse = FiniteDifferencePipeline(geom, point, 2 * h, chart)

    def _combine(self, name: str) -> np.ndarray:
        a = np.asarray(getattr(self.fine, name)())
        b = np.asarray(getattr(self.coarse, name)())
        return ((4 * a - b) / 3).astype(float)

    def riemann(self):
        return self._combine("riemann")

    def ricci(self):
        return self._combine("ricci")

    def christoffel(self):
        a, b = self.fine.get("gam"), self.coarse.get("gam")
        return ((4 * a - b) / 3).astype(float)

    def bach(self):
        return self._combine("bach")

    def U(self):
        return self._combine("U")

    def V(self):
        return self._combine("V")
