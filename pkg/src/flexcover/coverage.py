"""Per-class coverage percentages and report rendering."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .catalog import Catalog, IRClass, Stage
from .errors import InputError, InvariantError
from .matching import SatisfactionMatrix

COMBINED = "Combined"
FORMATS = ("markdown", "csv", "json")

# Row order of the published coverage grid.
REPORT_ORDER = (
    IRClass.RegulatoryConstraints,
    IRClass.HvacSystemParameters,
    IRClass.EnergyConsumptionMetering,
    IRClass.DrSchedulingManagement,
    IRClass.EnvironmentalFactorsForecasts,
    IRClass.BuildingOperationSettings,
    IRClass.TimeBasedParameters,
    IRClass.ForecastsOfEnergyBaseline,
    IRClass.EvChargingInfrastructure,
)
_STAGE_ORDER = list(Stage)


def percent(k: int, d: int) -> int:
    """100*k/d rounded half away from zero (k, d non-negative, d > 0)."""
    if d <= 0 or k < 0:
        raise ValueError("percent needs k >= 0 and d > 0")
    return (200 * k + d) // (2 * d)


@dataclass(frozen=True)
class CoverageCell:
    ir_class: IRClass
    ontology: str
    satisfied_count: int
    denominator: int
    percentage: int

    def __post_init__(self):
        if self.denominator <= 0 or not 0 <= self.satisfied_count <= self.denominator:
            raise InvariantError(
                f"bad coverage cell {self.ir_class.value}/{self.ontology}: "
                f"{self.satisfied_count}/{self.denominator}"
            )

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.satisfied_count, self.denominator)


@dataclass(frozen=True)
class CoverageReport:
    ontologies: tuple[str, ...]
    cells: Mapping[tuple[IRClass, str], CoverageCell]
    stages_per_class: Mapping[IRClass, frozenset[Stage]]

    def cell(self, ir_class: IRClass, ontology: str) -> CoverageCell:
        return self.cells[(ir_class, ontology)]

    def percentages(self, ir_class: IRClass) -> tuple[int, ...]:
        """Row of percentages in column order (each ontology, then Combined)."""
        return tuple(self.cells[(ir_class, o)].percentage for o in self.columns)

    @property
    def columns(self) -> tuple[str, ...]:
        return self.ontologies + (COMBINED,)


def _denominator(m: SatisfactionMatrix, c: IRClass, overrides, satisfied: int) -> int:
    n = len(m.catalog.by_class(c))
    d = (overrides or {}).get(c, n)
    if d < satisfied:
        raise InputError(
            f"denominator override {d} for {c.value} is smaller than the satisfied count {satisfied}"
        )
    if d <= 0:
        raise InputError(f"class {c.value} has no IRs and no denominator override")
    return d


def _check_complete(m: SatisfactionMatrix, ontologies: Sequence[str]) -> None:
    for o in ontologies:
        if o not in m.ontologies:
            raise InputError(f"ontology {o!r} is not in the satisfaction matrix")


def class_coverage(
    m: SatisfactionMatrix, c: IRClass, o: str, overrides: Mapping[IRClass, int] | None = None
) -> CoverageCell:
    _check_complete(m, [o])
    k = sum(1 for ir in m.catalog.by_class(c) if m.satisfied(ir.id, o))
    d = _denominator(m, c, overrides, k)
    return CoverageCell(c, o, k, d, percent(k, d))


def combined_coverage(
    m: SatisfactionMatrix,
    c: IRClass,
    ontologies: Sequence[str],
    overrides: Mapping[IRClass, int] | None = None,
) -> CoverageCell:
    """Coverage where an IR counts once if any listed ontology satisfies it."""
    if not ontologies:
        raise InputError("combined coverage needs at least one ontology")
    _check_complete(m, ontologies)
    k = sum(
        1 for ir in m.catalog.by_class(c) if any(m.satisfied(ir.id, o) for o in ontologies)
    )
    d = _denominator(m, c, overrides, k)
    return CoverageCell(c, COMBINED, k, d, percent(k, d))


def full_report(
    m: SatisfactionMatrix,
    catalog: Catalog | None = None,
    overrides: Mapping[IRClass, int] | None = None,
) -> CoverageReport:
    catalog = catalog or m.catalog
    cells = {}
    stages = {}
    for c in REPORT_ORDER:
        for o in m.ontologies:
            cells[(c, o)] = class_coverage(m, c, o, overrides)
        if m.ontologies:
            cells[(c, COMBINED)] = combined_coverage(m, c, m.ontologies, overrides)
        else:
            cells[(c, COMBINED)] = CoverageCell(
                c, COMBINED, 0, _denominator(m, c, overrides, 0), 0
            )
        stages[c] = frozenset().union(*(ir.stages for ir in catalog.by_class(c)))
    return CoverageReport(tuple(m.ontologies), cells, stages)


def stage_codes(stages) -> str:
    return ", ".join(s.code for s in sorted(stages, key=_STAGE_ORDER.index))


def render_report(r: CoverageReport, fmt: str = "markdown") -> str:
    if fmt == "markdown":
        return _markdown(r)
    if fmt == "csv":
        return _csv(r)
    if fmt == "json":
        return _json(r)
    raise InputError(f"unknown format {fmt!r} (choose from {', '.join(FORMATS)})")


def _markdown(r: CoverageReport) -> str:
    header = ["IR Class", *r.columns, "Stage"]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for c in REPORT_ORDER:
        vals = [f"{p}%" for p in r.percentages(c)]
        lines.append("| " + " | ".join([c.title, *vals, stage_codes(r.stages_per_class[c])]) + " |")
    return "\n".join(lines) + "\n"


def _csv(r: CoverageReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "ontology", "satisfied", "denominator", "percentage", "stages"])
    for c in REPORT_ORDER:
        for o in r.columns:
            cell = r.cells[(c, o)]
            w.writerow(
                [c.value, o, cell.satisfied_count, cell.denominator, cell.percentage,
                 stage_codes(r.stages_per_class[c])]
            )
    return buf.getvalue()


def report_records(r: CoverageReport) -> list[dict]:
    out = []
    for c in REPORT_ORDER:
        for o in r.columns:
            cell = r.cells[(c, o)]
            out.append(
                {
                    "ir_class": c.value,
                    "ontology": o,
                    "satisfied_count": cell.satisfied_count,
                    "denominator": cell.denominator,
                    "ratio": f"{cell.satisfied_count}/{cell.denominator}",
                    "percentage": cell.percentage,
                    "stages": [s.value for s in sorted(r.stages_per_class[c], key=_STAGE_ORDER.index)],
                }
            )
    return out


def _json(r: CoverageReport) -> str:
    return json.dumps(report_records(r), indent=2) + "\n"
