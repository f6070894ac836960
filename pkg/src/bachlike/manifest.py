"""INI manifests for the verifier, with environment and command-line overrides.

Precedence, lowest first: built-in defaults, the manifest file, ``BACHLIKE_``
environment variables (``BACHLIKE_<SECTION>_<KEY>``, e.g.
``BACHLIKE_QUADRATURE_Q=32``), then explicit command-line flags.

Example::

    [geometry]
    names = RAND, GAUSS, CYL
    random_seed = 7

    [suite]
    ids = pointwise-all
    ids.GAUSS = lemmas, S-SOLITON
    samples = 50
    seed = 0
    jet_order = 5

    [quadrature]
    q = 24
    levels = GAUSS:4, CYL:5

    [output]
    path = report.json
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import CATALOG_NAMES, GeometrySpec, RandomMetricSpec, catalog_get, random_metric
from .identities import IDENTITIES, SUITES
from .lemmas import ALIASES, CORE_LEMMAS, LEMMA_ORDER, LEMMAS

ENV_PREFIX = "BACHLIKE_"
SECTIONS = ("geometry", "suite", "quadrature", "output")
MIN_ORDER, MAX_ORDER = 2, 6

LEMMA_SUITES = {
    "lemmas": CORE_LEMMAS,
    "lemmas-all": tuple(LEMMAS),
}


class ManifestError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class Manifest:
    geometries: tuple[str, ...] = ("RAND",)
    random: RandomMetricSpec = field(default_factory=lambda: RandomMetricSpec(seed=7))
    ids: tuple[str, ...] = ("pointwise-all",)
    geometry_ids: dict = field(default_factory=dict)  # name -> tuple of ids
    samples: int = 50
    seed: int = 0
    jet_order: int = 5
    alpha: float = 1.0
    beta: float = 1.0
    pointwise_tolerance: float | None = None
    integral_rel_tol: float = 1e-6
    integral_abs_tol: float = 1e-8
    q: int = 24
    levels: dict = field(default_factory=lambda: {"GAUSS": 4.0, "CYL": 5.0})
    default_level: float = 5.0
    tail_tolerance: float = 1e-8
    grid: tuple[float, float, float] = (-1.0, 1.0, 0.25)
    include_grid: bool = True
    bach_line_samples: int = 20
    out: str | None = None
    digits: int = 6
    source: str = "<defaults>"

    # ------------------------------------------------------------------
    def ids_for(self, geometry: str) -> tuple[str, ...]:
        return self.geometry_ids.get(geometry.upper(), self.ids)

    def expanded(self, geometry: str) -> tuple[list[str], list[str]]:
        """(pointwise ids, lemma ids) selected for one geometry, in manifest order."""
        return expand_ids(self.ids_for(geometry))

    def geometry(self, name: str) -> GeometrySpec:
        name = name.upper()
        if name in ("RAND", "RAND4"):
            return random_metric(self.random)
        if name == "RAND5":
            return random_metric(replace(self.random, dim=5))
        if name == "RANDF":
            return random_metric(replace(self.random, with_f=True))
        return catalog_get(name)

    def level(self, geometry: str) -> float:
        return self.levels.get(geometry.upper(), self.default_level)

    def required_order(self) -> int:
        need = 0
        for g in self.geometries:
            pw, lem = self.expanded(g)
            need = max([need] + [IDENTITIES[i].order for i in pw] + ([LEMMA_ORDER] if lem else []))
        return need


GEOMETRY_NAMES = CATALOG_NAMES + ("RAND", "RAND4", "RAND5", "RANDF")


def expand_ids(ids) -> tuple[list[str], list[str]]:
    pointwise: list[str] = []
    lemmas: list[str] = []

    def add(lst, x):
        if x not in lst:
            lst.append(x)

    for raw in ids:
        key = raw.strip()
        low, up = key.lower(), key.upper()
        if low == "all":
            for i in IDENTITIES:
                add(pointwise, i)
            for i in CORE_LEMMAS + ("L11", "L14"):
                add(lemmas, i)
        elif low in SUITES:
            for i in SUITES[low]:
                add(pointwise, i)
        elif low in LEMMA_SUITES:
            for i in LEMMA_SUITES[low]:
                add(lemmas, i)
        elif up in IDENTITIES:
            add(pointwise, up)
        elif up in LEMMAS or up in ALIASES:
            add(lemmas, ALIASES.get(up, up))
        else:
            raise ManifestError(f"unknown identity, lemma or suite {key!r}")
    return pointwise, lemmas


# ---------------------------------------------------------------------------
# parsing


def _list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.replace("\n", ",").split(",") if x.strip())


def _num(section: str, key: str, s: str, kind=float):
    try:
        return kind(s)
    except ValueError:
        raise ManifestError(f"[{section}] {key} = {s!r} is not a valid {kind.__name__}") from None


def _bool(section: str, key: str, s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ManifestError(f"[{section}] {key} = {s!r} is not a boolean")


def _levels(s: str) -> dict:
    out = {}
    for item in _list(s):
        if ":" not in item:
            raise ManifestError(f"level entry {item!r} must look like NAME:r")
        name, r = item.split(":", 1)
        out[name.strip().upper()] = _num("quadrature", "levels", r)
    return out


def env_overrides(environ=None) -> dict:
    """{(section, key): value} from BACHLIKE_<SECTION>_<KEY> variables."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in sorted(environ.items()):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section = next((s for s in SECTIONS if rest.startswith(s + "_")), None)
        if section is None:
            raise ManifestError(f"{name}: expected {ENV_PREFIX}<SECTION>_<KEY> with SECTION in {SECTIONS}")
        out[(section, rest[len(section) + 1:])] = value
    return out


def _apply(m: Manifest, section: str, key: str, value: str) -> Manifest:
    s, k, v = section, key.strip().lower(), value.strip()
    if s == "geometry":
        if k == "names":
            names = tuple(x.upper() for x in _list(v))
            bad = [x for x in names if x not in GEOMETRY_NAMES]
            if bad or not names:
                raise ManifestError(f"unknown geometry {bad or v!r}; expected {', '.join(GEOMETRY_NAMES)}")
            return replace(m, geometries=names)
        rmap = {"random_seed": ("seed", int), "random_epsilon": ("epsilon", float),
                "random_degree": ("degree", int), "random_dim": ("dim", int), "random_f_degree": ("f_degree", int)}
        if k in rmap:
            attr, kind = rmap[k]
            return replace(m, random=replace(m.random, **{attr: _num(s, k, v, kind)}))
        if k == "random_with_f":
            return replace(m, random=replace(m.random, with_f=_bool(s, k, v)))
    elif s == "suite":
        if k == "ids":
            return replace(m, ids=_list(v))
        if k.startswith("ids."):
            g = k[4:].upper()
            return replace(m, geometry_ids={**m.geometry_ids, g: _list(v)})
        ints = {"samples": "samples", "seed": "seed", "jet_order": "jet_order", "bach_line_samples": "bach_line_samples"}
        floats = {"alpha": "alpha", "beta": "beta", "pointwise_tolerance": "pointwise_tolerance",
                  "integral_tolerance": "integral_rel_tol", "integral_abs_tolerance": "integral_abs_tol"}
        if k in ints:
            return replace(m, **{ints[k]: _num(s, k, v, int)})
        if k in floats:
            return replace(m, **{floats[k]: _num(s, k, v)})
        if k == "grid":
            parts = _list(v)
            if len(parts) != 3:
                raise ManifestError("[suite] grid must be 'min, max, step'")
            return replace(m, grid=tuple(_num(s, k, x) for x in parts))
        if k == "include_grid":
            return replace(m, include_grid=_bool(s, k, v))
    elif s == "quadrature":
        if k == "q":
            return replace(m, q=_num(s, k, v, int))
        if k == "levels":
            return replace(m, levels=_levels(v))
        if k == "default_level":
            return replace(m, default_level=_num(s, k, v))
        if k == "tail_tolerance":
            return replace(m, tail_tolerance=_num(s, k, v))
    elif s == "output":
        if k == "path":
            return replace(m, out=v or None)
        if k == "digits":
            return replace(m, digits=_num(s, k, v, int))
    raise ManifestError(f"unknown manifest key [{section}] {key}")


def validate(m: Manifest) -> Manifest:
    if not MIN_ORDER <= m.jet_order <= MAX_ORDER:
        raise ManifestError(f"jet order must be in {MIN_ORDER}..{MAX_ORDER}, got {m.jet_order}")
    if m.samples < 1:
        raise ManifestError("samples must be >= 1")
    if m.q < 2:
        raise ManifestError("quadrature q must be >= 2")
    if not 1 <= m.digits <= 17:
        raise ManifestError("digits must be in 1..17")
    for g in m.geometries:
        m.expanded(g)  # raises on unknown ids
    need = m.required_order()
    if m.jet_order < need:
        offenders = set()
        for g in m.geometries:
            pw, lem = m.expanded(g)
            offenders.update(i for i in pw if IDENTITIES[i].order > m.jet_order)
            if lem and LEMMA_ORDER > m.jet_order:
                offenders.add("integral lemmas")
        offenders = sorted(offenders)
        raise ManifestError(
            f"jet order {m.jet_order} is too low: the selected checks need order {need} "
            f"({', '.join(offenders)}); raise [suite] jet_order or drop those ids"
        )
    return m


def load_manifest(path: str | os.PathLike | None = None, environ=None, **flags) -> Manifest:
    """Reads ``path`` (if given), applies environment and flag overrides, validates."""
    m = Manifest()
    if path is not None:
        p = Path(path)
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str  # keep ids.GAUSS readable; keys are lowered in _apply
        try:
            with open(p, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, UnicodeDecodeError, configparser.Error) as exc:
            raise ManifestError(f"cannot read manifest {p}: {exc}") from None
        for section in cp.sections():
            if section not in SECTIONS:
                raise ManifestError(f"unknown manifest section [{section}]")
            for key, value in cp.items(section):
                m = _apply(m, section, key, value)
        m = replace(m, source=p.name)
        if m.out is not None and not Path(m.out).is_absolute():
            m = replace(m, out=str(p.parent / m.out))
    for (section, key), value in env_overrides(environ).items():
        m = _apply(m, section, key, value)
    flag_map = {"seed": ("suite", "seed"), "jet_order": ("suite", "jet_order"), "quadrature": ("quadrature", "q"),
                "tolerance": ("suite", "pointwise_tolerance"), "out": ("output", "path")}
    for name, value in flags.items():
        if value is None:
            continue
        if name not in flag_map:
            raise ManifestError(f"unknown override {name!r}")
        m = _apply(m, *flag_map[name], str(value))
    return validate(m)
