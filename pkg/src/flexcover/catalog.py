"""Catalog of informational requirements (IRs) for incentive-based demand response.

The builtin catalog ships as ``data/catalog.json``; :func:`load_catalog` reads it
(or any file in the same format) into immutable dataclasses.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CatalogError

BUILTIN = "builtin"


class IRClass(str, Enum):
    RegulatoryConstraints = "RegulatoryConstraints"
    HvacSystemParameters = "HvacSystemParameters"
    BuildingOperationSettings = "BuildingOperationSettings"
    DrSchedulingManagement = "DrSchedulingManagement"
    EvChargingInfrastructure = "EvChargingInfrastructure"
    EnvironmentalFactorsForecasts = "EnvironmentalFactorsForecasts"
    TimeBasedParameters = "TimeBasedParameters"
    ForecastsOfEnergyBaseline = "ForecastsOfEnergyBaseline"
    EnergyConsumptionMetering = "EnergyConsumptionMetering"

    @property
    def title(self) -> str:
        return CLASS_TITLES[self]


CLASS_TITLES = {
    IRClass.RegulatoryConstraints: "Regulatory Constraints",
    IRClass.HvacSystemParameters: "HVAC System Parameters",
    IRClass.BuildingOperationSettings: "Building Operation Settings & Measurements",
    IRClass.DrSchedulingManagement: "Demand Response (DR) Scheduling and Management",
    IRClass.EvChargingInfrastructure: "Electric Vehicle (EV) Charging Infrastructure",
    IRClass.EnvironmentalFactorsForecasts: "Environmental Factors and Forecasts",
    IRClass.TimeBasedParameters: "Time-Based Parameters",
    IRClass.ForecastsOfEnergyBaseline: "Forecasts of Energy Baseline",
    IRClass.EnergyConsumptionMetering: "Energy Consumption and Metering",
}

# Row counts of the published categorization table, in IRClass order.
CLASS_CARDINALITIES = {
    IRClass.RegulatoryConstraints: 13,
    IRClass.HvacSystemParameters: 7,
    IRClass.BuildingOperationSettings: 13,
    IRClass.DrSchedulingManagement: 7,
    IRClass.EvChargingInfrastructure: 12,
    IRClass.EnvironmentalFactorsForecasts: 9,
    IRClass.TimeBasedParameters: 2,
    IRClass.ForecastsOfEnergyBaseline: 3,
    IRClass.EnergyConsumptionMetering: 2,
}


class Stage(str, Enum):
    EnrollmentQualification = "EnrollmentQualification"
    SchedulingAwardNotification = "SchedulingAwardNotification"
    DeploymentRealtimeComms = "DeploymentRealtimeComms"
    MeasurementPerformance = "MeasurementPerformance"

    @property
    def code(self) -> str:
        return STAGE_CODES[self]


STAGE_CODES = {
    Stage.EnrollmentQualification: "E&Q",
    Stage.SchedulingAwardNotification: "S&AN",
    Stage.DeploymentRealtimeComms: "D&RC",
    Stage.MeasurementPerformance: "M&P",
}

KIND_HINTS = ("Class", "ObjectProperty", "DataProperty", "Any")


@dataclass(frozen=True)
class SourceWork:
    id: str
    citation: str


@dataclass(frozen=True)
class ConceptDescriptor:
    phrase: str
    kind_hint: str = "Any"


@dataclass(frozen=True)
class InformationalRequirement:
    id: str
    name: str
    ir_class: IRClass
    stages: frozenset[Stage]
    components: tuple[ConceptDescriptor, ...]
    sources: frozenset[str]


@dataclass(frozen=True)
class Violation:
    ir_id: str | None
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class Catalog:
    irs: tuple[InformationalRequirement, ...]
    works: tuple[SourceWork, ...]
    version: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {ir.id: ir for ir in self.irs})

    def __len__(self) -> int:
        return len(self.irs)

    def get(self, ir_id: str) -> InformationalRequirement:
        try:
            return self._by_id[ir_id]
        except KeyError:
            raise KeyError(f"unknown IR id {ir_id!r}") from None

    def __contains__(self, ir_id: object) -> bool:
        return ir_id in self._by_id

    def by_class(self, ir_class: IRClass) -> list[InformationalRequirement]:
        return [ir for ir in self.irs if ir.ir_class is ir_class]


def slugify(name: str) -> str:
    """Stable snake-case id for an IR display name."""
    s = name.lower().replace("(", "").replace(")", "")
    return re.sub(r"[^a-z0-9]+", "_", s).strip("_")


def _normalize_phrase_text(phrase: str) -> str:
    return " ".join(phrase.split())


def _enum(enum_cls, value, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        raise CatalogError(f"{where}: unknown {enum_cls.__name__} {value!r}") from None


def catalog_from_dict(doc: dict) -> Catalog:
    """Build a :class:`Catalog` from the decoded JSON document (no invariant checks)."""
    if not isinstance(doc, dict):
        raise CatalogError("catalog root must be an object")
    for key in ("version", "works", "irs"):
        if key not in doc:
            raise CatalogError(f"catalog is missing top-level key {key!r}")
    works = []
    for i, w in enumerate(doc["works"]):
        try:
            works.append(SourceWork(id=str(w["id"]), citation=str(w.get("citation", ""))))
        except (KeyError, TypeError):
            raise CatalogError(f"works[{i}]: expected an object with an 'id'") from None
    irs = []
    for i, raw in enumerate(doc["irs"]):
        where = f"irs[{i}]"
        try:
            comps = tuple(
                ConceptDescriptor(
                    phrase=_normalize_phrase_text(str(c["phrase"])),
                    kind_hint=str(c.get("kind_hint", "Any")),
                )
                for c in raw.get("components", [])
            )
            for c in comps:
                if c.kind_hint not in KIND_HINTS:
                    raise CatalogError(f"{where}: unknown kind_hint {c.kind_hint!r}")
            irs.append(
                InformationalRequirement(
                    id=str(raw["id"]),
                    name=str(raw["name"]),
                    ir_class=_enum(IRClass, raw["ir_class"], where),
                    stages=frozenset(_enum(Stage, s, where) for s in raw.get("stages", [])),
                    components=comps,
                    sources=frozenset(str(s) for s in raw.get("sources", [])),
                )
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise CatalogError(f"{where}: malformed record ({exc})") from None
    return Catalog(irs=tuple(irs), works=tuple(works), version=str(doc["version"]))


def catalog_to_dict(c: Catalog) -> dict:
    return {
        "version": c.version,
        "works": [{"id": w.id, "citation": w.citation} for w in c.works],
        "irs": [
            {
                "id": ir.id,
                "name": ir.name,
                "ir_class": ir.ir_class.value,
                "stages": [s.value for s in Stage if s in ir.stages],
                "sources": sorted(ir.sources),
                "components": [
                    {"phrase": d.phrase, "kind_hint": d.kind_hint} for d in ir.components
                ],
            }
            for ir in c.irs
        ],
    }


def _read_text(path: str | Path) -> str:
    if str(path) == BUILTIN:
        return resources.files("flexcover").joinpath("data/catalog.json").read_text("utf-8")
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CatalogError(f"catalog file not found: {path}") from None
    except OSError as exc:
        raise CatalogError(f"cannot read catalog {path}: {exc}") from None


def load_catalog(path: str | Path = BUILTIN) -> Catalog:
    """Load and validate a catalog file; ``"builtin"`` selects the shipped catalog.

    Raises :class:`CatalogError` on JSON syntax errors (with line number), duplicate
    IR or work ids, dangling source references and other invariant violations.
    """
    text = _read_text(path)
    if not text.strip():
        raise CatalogError(f"{path}: line 1: empty catalog file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    catalog = catalog_from_dict(doc)
    violations = validate_catalog(catalog)
    if violations:
        lines = "; ".join(f"{v.rule} ({v.ir_id or '-'}): {v.detail}" for v in violations)
        raise CatalogError(f"{path}: {lines}")
    return catalog


def validate_catalog(
    c: Catalog, expected_cardinalities: dict[IRClass, int] | None = None
) -> list[Violation]:
    """Return every invariant violation of ``c``; an empty list means valid.

    Class cardinalities are only checked when ``expected_cardinalities`` is given
    (use :data:`CLASS_CARDINALITIES` for the builtin catalog).
    """
    out: list[Violation] = []
    work_ids: set[str] = set()
    for w in c.works:
        if w.id in work_ids:
            out.append(Violation(None, "duplicate-work-id", w.id))
        work_ids.add(w.id)
    seen: set[str] = set()
    for ir in c.irs:
        if ir.id in seen:
            out.append(Violation(ir.id, "duplicate-ir-id", ir.id))
        seen.add(ir.id)
        if not ir.components:
            out.append(Violation(ir.id, "empty-components"))
        for d in ir.components:
            if not d.phrase.strip():
                out.append(Violation(ir.id, "empty-phrase"))
        if not ir.stages:
            out.append(Violation(ir.id, "empty-stages"))
        if not ir.sources:
            out.append(Violation(ir.id, "empty-sources"))
        for s in sorted(ir.sources - work_ids):
            out.append(Violation(ir.id, "dangling-source", s))
    if expected_cardinalities is not None:
        for cls, want in expected_cardinalities.items():
            got = sum(1 for ir in c.irs if ir.ir_class is cls)
            if got != want:
                out.append(Violation(None, "class-cardinality", f"{cls.value}: {got} != {want}"))
    return out


def query_irs(
    c: Catalog, class_filter: IRClass | None = None, stage_filter: Stage | None = None
) -> list[InformationalRequirement]:
    return [
        ir
        for ir in c.irs
        if (class_filter is None or ir.ir_class is class_filter)
        and (stage_filter is None or stage_filter in ir.stages)
    ]


def discovery_curve(c: Catalog, ordering: Sequence[str] | None = None) -> list[tuple[int, int]]:
    """Cumulative number of distinct IRs attributable to the first k works.

    ``ordering`` defaults to the catalog's work order (first appearance in the
    reviewed literature). It must list every work that some IR cites.
    """
    if ordering is None:
        ordering = [w.id for w in c.works]
    known = {w.id for w in c.works}
    seen: set[str] = set()
    for wid in ordering:
        if wid not in known:
            raise CatalogError(f"unknown work id in ordering: {wid!r}")
        if wid in seen:
            raise CatalogError(f"duplicate work id in ordering: {wid!r}")
        seen.add(wid)
    referenced = set().union(*(ir.sources for ir in c.irs)) if c.irs else set()
    missing = referenced - seen
    if missing:
        raise CatalogError(f"ordering omits referenced works: {', '.join(sorted(missing))}")

    found: set[str] = set()
    curve = []
    for k, wid in enumerate(ordering, start=1):
        found.update(ir.id for ir in c.irs if wid in ir.sources)
        curve.append((k, len(found)))
    return curve


def fit_log_trend(points: Iterable[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares fit of ``y = a*ln(x) + b``; returns ``(a, b, r2)``."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least 2 points for a log fit")
    if any(x < 1 for x, _ in pts):
        raise ValueError("log fit requires x >= 1")
    lx = [math.log(x) for x, _ in pts]
    ys = [float(y) for _, y in pts]
    n = len(pts)
    mx, my = sum(lx) / n, sum(ys) / n
    sxx = sum((u - mx) ** 2 for u in lx)
    if sxx == 0:
        raise ValueError("zero variance in ln(x)")
    sxy = sum((u - mx) * (v - my) for u, v in zip(lx, ys))
    a = sxy / sxx
    b = my - a * mx
    ss_tot = sum((v - my) ** 2 for v in ys)
    ss_res = sum((v - (a * u + b)) ** 2 for u, v in zip(lx, ys))
    if ss_tot == 0:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return a, b, r2
