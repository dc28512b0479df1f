"""Eligibility of a building for DR programs.

A building capability profile is compared against each program's requirement
record. Every applicable requirement yields a tri-state verdict; a missing
profile value produces ``Unknown`` rather than a guess.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import EligibilityError, InputError
from .inventory import OntologyInventory, load_inventory
from .matching import normalize


class ServiceType(str, Enum):
    Energy = "Energy"
    Capacity = "Capacity"
    Regulation = "Regulation"
    OperatingReserves = "OperatingReserves"
    SecondaryReserves = "SecondaryReserves"


class Verdict(str, Enum):
    Satisfied = "Satisfied"
    Unsatisfied = "Unsatisfied"
    Unknown = "Unknown"


class Overall(str, Enum):
    Eligible = "Eligible"
    NeedsData = "NeedsData"
    Ineligible = "Ineligible"


def _check_nonneg(obj, names: Iterable[str], positive: Iterable[str] = ()) -> None:
    for n in names:
        v = getattr(obj, n)
        if v is not None and v < 0:
            raise EligibilityError(f"{type(obj).__name__}.{n} must be non-negative, got {v}")
    for n in positive:
        v = getattr(obj, n)
        if v is not None and v <= 0:
            raise EligibilityError(f"{type(obj).__name__}.{n} must be positive, got {v}")


@dataclass(frozen=True)
class ProgramRequirements:
    program_id: str
    service_type: ServiceType
    min_resource_size_kw: float | None = None
    min_reduction_kw: float | None = None
    availability_window: str | None = None
    aggregation_allowed: bool = False
    after_the_fact_metering_required: bool = False
    meter_interval_s: int | None = None
    meter_accuracy_pct: float | None = None
    meter_reporting_deadline_h: float | None = None
    telemetry_required: bool = False
    comm_protocols: frozenset[str] = frozenset()
    telemetry_interval_s: int | None = None
    telemetry_accuracy_pct: float | None = None
    advance_notification_min: float | None = None
    lead_time_min: float | None = None
    sustained_response_min: float | None = None
    recovery_period_min: float | None = None
    non_participation_notice: bool = False

    def __post_init__(self):
        object.__setattr__(self, "service_type", ServiceType(self.service_type))
        object.__setattr__(self, "comm_protocols", frozenset(self.comm_protocols))
        _check_nonneg(
            self,
            ("min_resource_size_kw", "min_reduction_kw", "advance_notification_min",
             "lead_time_min", "recovery_period_min"),
            ("meter_interval_s", "meter_accuracy_pct", "meter_reporting_deadline_h",
             "telemetry_interval_s", "telemetry_accuracy_pct", "sustained_response_min"),
        )
        if not self.after_the_fact_metering_required:
            for n in ("meter_interval_s", "meter_accuracy_pct", "meter_reporting_deadline_h"):
                if getattr(self, n) is not None:
                    raise EligibilityError(
                        f"program {self.program_id}: {n} given but after-the-fact metering is not required"
                    )
        if not self.telemetry_required:
            for n in ("telemetry_interval_s", "telemetry_accuracy_pct"):
                if getattr(self, n) is not None:
                    raise EligibilityError(
                        f"program {self.program_id}: {n} given but telemetry is not required"
                    )
            if self.comm_protocols:
                raise EligibilityError(
                    f"program {self.program_id}: comm_protocols given but telemetry is not required"
                )


@dataclass(frozen=True)
class ServiceTiming:
    """Ramp and sustain windows in minutes; ``None`` is an open bound."""

    service_type: ServiceType
    ramp_min_lo: float | None = None
    ramp_min_hi: float | None = None
    sustain_lo_min: float | None = None
    sustain_hi_min: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "service_type", ServiceType(self.service_type))
        _check_nonneg(self, ("ramp_min_lo", "ramp_min_hi", "sustain_lo_min", "sustain_hi_min"))
        for lo, hi in (("ramp_min_lo", "ramp_min_hi"), ("sustain_lo_min", "sustain_hi_min")):
            a, b = getattr(self, lo), getattr(self, hi)
            if a is not None and b is not None and a > b:
                raise EligibilityError(f"{self.service_type.value}: {lo}={a} exceeds {hi}={b}")


@dataclass(frozen=True)
class BuildingProfile:
    building_id: str
    shed_capability_kw: float | None = None
    metering_present: bool = False
    meter_interval_s: int | None = None
    meter_accuracy_pct: float | None = None
    telemetry_present: bool = False
    telemetry_protocols: frozenset[str] = frozenset()
    telemetry_interval_s: int | None = None
    telemetry_accuracy_pct: float | None = None
    fastest_ramp_min: float | None = None
    max_sustain_min: float | None = None
    in_aggregation: bool = False

    def __post_init__(self):
        object.__setattr__(self, "telemetry_protocols", frozenset(self.telemetry_protocols))
        _check_nonneg(
            self,
            ("shed_capability_kw", "fastest_ramp_min", "max_sustain_min"),
            ("meter_interval_s", "meter_accuracy_pct", "telemetry_interval_s", "telemetry_accuracy_pct"),
        )
        if not self.metering_present and (
            self.meter_interval_s is not None or self.meter_accuracy_pct is not None
        ):
            raise EligibilityError(f"building {self.building_id}: meter values given without a meter")
        if not self.telemetry_present and (
            self.telemetry_interval_s is not None or self.telemetry_accuracy_pct is not None
        ):
            raise EligibilityError(f"building {self.building_id}: telemetry values given without telemetry")


@dataclass(frozen=True)
class RequirementVerdict:
    requirement_name: str
    verdict: Verdict
    reason: str = ""


def classify(verdicts: Iterable[RequirementVerdict]) -> Overall:
    vs = [v.verdict for v in verdicts]
    if Verdict.Unsatisfied in vs:
        return Overall.Ineligible
    if Verdict.Unknown in vs:
        return Overall.NeedsData
    return Overall.Eligible


@dataclass(frozen=True)
class EligibilityReport:
    building_id: str
    program_id: str
    verdicts: tuple[RequirementVerdict, ...]
    overall: Overall = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "overall", classify(self.verdicts))

    @property
    def unknown_count(self) -> int:
        return sum(1 for v in self.verdicts if v.verdict is Verdict.Unknown)

    def verdict(self, name: str) -> RequirementVerdict:
        for v in self.verdicts:
            if v.requirement_name == name:
                return v
        raise KeyError(name)


def _at_least(name, have, need, unit, missing_reason) -> RequirementVerdict:
    if have is None:
        return RequirementVerdict(name, Verdict.Unknown, missing_reason)
    ok = have >= need
    return RequirementVerdict(
        name, Verdict.Satisfied if ok else Verdict.Unsatisfied, f"{have} {unit} vs required >= {need} {unit}"
    )


def _at_most(name, have, need, unit, missing_reason) -> RequirementVerdict:
    if have is None:
        return RequirementVerdict(name, Verdict.Unknown, missing_reason)
    ok = have <= need
    return RequirementVerdict(
        name, Verdict.Satisfied if ok else Verdict.Unsatisfied, f"{have} {unit} vs required <= {need} {unit}"
    )


def _present(name, flag: bool, what: str) -> RequirementVerdict:
    if flag:
        return RequirementVerdict(name, Verdict.Satisfied, f"{what} present")
    return RequirementVerdict(name, Verdict.Unsatisfied, f"no {what}")


def assess(b: BuildingProfile, p: ProgramRequirements, t: ServiceTiming) -> EligibilityReport:
    """Per-requirement verdicts of building ``b`` against program ``p``.

    Numeric rules: shed capability must reach the size minima, meter and
    telemetry intervals and error bounds must not exceed the program's, the
    fastest ramp must fit within both the lead time and the service's upper ramp
    bound, and the sustain capability must cover the sustained response period.
    """
    if t.service_type is not p.service_type:
        raise EligibilityError(
            f"program {p.program_id} is {p.service_type.value} but timing is {t.service_type.value}"
        )
    out: list[RequirementVerdict] = []
    shed_missing = "shed capability unknown (needs estimation)"

    if p.min_resource_size_kw is not None:
        if p.aggregation_allowed and b.in_aggregation:
            out.append(RequirementVerdict(
                "min_resource_size", Verdict.Satisfied, "size met through an aggregated resource"
            ))
        else:
            out.append(_at_least("min_resource_size", b.shed_capability_kw, p.min_resource_size_kw,
                                 "kW", shed_missing))
    if p.min_reduction_kw is not None:
        out.append(_at_least("min_reduction", b.shed_capability_kw, p.min_reduction_kw, "kW", shed_missing))
    if p.availability_window:
        out.append(RequirementVerdict(
            "availability", Verdict.Unknown, f"availability window '{p.availability_window}' needs manual review"
        ))

    if p.after_the_fact_metering_required:
        out.append(_present("after_the_fact_metering", b.metering_present, "revenue meter"))
    for name, need, have, unit in (
        ("meter_interval", p.meter_interval_s, b.meter_interval_s, "s"),
        ("meter_accuracy", p.meter_accuracy_pct, b.meter_accuracy_pct, "%"),
    ):
        if need is None:
            continue
        if not b.metering_present:
            out.append(RequirementVerdict(name, Verdict.Unsatisfied, "no revenue meter"))
        else:
            out.append(_at_most(name, have, need, unit, f"{name} of the meter unknown"))

    if p.telemetry_required:
        out.append(_present("telemetry", b.telemetry_present, "telemetry"))
    if p.comm_protocols:
        if not b.telemetry_protocols:
            out.append(RequirementVerdict("communication_protocol", Verdict.Unknown, "building protocols unknown"))
        else:
            want = {s.casefold() for s in p.comm_protocols}
            common = sorted(s for s in b.telemetry_protocols if s.casefold() in want)
            if common:
                out.append(RequirementVerdict("communication_protocol", Verdict.Satisfied,
                                              "shared: " + ", ".join(common)))
            else:
                out.append(RequirementVerdict(
                    "communication_protocol", Verdict.Unsatisfied,
                    "none of " + ", ".join(sorted(p.comm_protocols)) + " supported",
                ))
    for name, need, have, unit in (
        ("telemetry_interval", p.telemetry_interval_s, b.telemetry_interval_s, "s"),
        ("telemetry_accuracy", p.telemetry_accuracy_pct, b.telemetry_accuracy_pct, "%"),
    ):
        if need is None:
            continue
        if not b.telemetry_present:
            out.append(RequirementVerdict(name, Verdict.Unsatisfied, "no telemetry"))
        else:
            out.append(_at_most(name, have, need, unit, f"{name} unknown"))

    limits = [x for x in (p.lead_time_min, t.ramp_min_hi) if x is not None]
    if limits:
        out.append(_at_most("ramp", b.fastest_ramp_min, min(limits), "min", "ramp time unknown"))
    if p.sustained_response_min is not None:
        out.append(_at_least("sustained_response", b.max_sustain_min, p.sustained_response_min,
                             "min", "sustain capability unknown"))
    return EligibilityReport(b.building_id, p.program_id, tuple(out))


_OVERALL_RANK = {Overall.Eligible: 0, Overall.NeedsData: 1, Overall.Ineligible: 2}


def portfolio_key(r: EligibilityReport):
    return (_OVERALL_RANK[r.overall], r.unknown_count if r.overall is Overall.NeedsData else 0, r.program_id)


def assess_portfolio(
    b: BuildingProfile, programs: Sequence[tuple[ProgramRequirements, ServiceTiming]]
) -> list[EligibilityReport]:
    """Eligible first, then NeedsData by fewest unknowns, then Ineligible; ties by program id."""
    return sorted((assess(b, p, t) for p, t in programs), key=portfolio_key)


KNOWN_PROTOCOLS = {
    "bacnet": "BACnet",
    "modbus": "Modbus",
    "openadr": "OpenADR",
    "mqtt": "MQTT",
    "lonworks": "LonWorks",
    "knx": "KNX",
    "dnp3": "DNP3",
    "iccp": "ICCP",
}
_PROTOCOL_RE = re.compile(r"(?<![a-z0-9])(" + "|".join(KNOWN_PROTOCOLS) + r")(?![a-z0-9])")
_METER_TOKENS = {"meter", "meters", "metering", "submeter"}


def profile_from_inventory(
    building_inventory: OntologyInventory, overrides: Mapping | None = None
) -> BuildingProfile:
    """Infer presence flags from term labels; numbers come only from ``overrides``.

    A term with a meter token sets ``metering_present``; a telemetry token or a
    known protocol name sets ``telemetry_present``, and protocol names are collected.
    """
    overrides = dict(overrides or {})
    metering = telemetry = False
    protocols: set[str] = set()
    for term in building_inventory:
        for label in term.labels:
            tokens = set(normalize(label))
            metering = metering or bool(tokens & _METER_TOKENS)
            telemetry = telemetry or "telemetry" in tokens
            protocols.update(KNOWN_PROTOCOLS[m] for m in _PROTOCOL_RE.findall(label.casefold()))
    fields = {
        "building_id": building_inventory.ontology_id,
        "metering_present": metering,
        "telemetry_present": telemetry or bool(protocols),
        "telemetry_protocols": frozenset(protocols),
    }
    known = {f.name for f in dataclasses.fields(BuildingProfile)}
    for k, v in overrides.items():
        if k not in known:
            raise EligibilityError(f"unknown building profile field {k!r}")
        fields[k] = v
    return BuildingProfile(**fields)


# loading


def _read_json(path: str | Path, what: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _build(cls, doc: dict, where: str):
    if not isinstance(doc, dict):
        raise EligibilityError(f"{where}: expected an object")
    known = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(doc) - known
    if unknown:
        raise EligibilityError(f"{where}: unknown field(s) {', '.join(sorted(unknown))}")
    try:
        return cls(**doc)
    except ValueError as exc:
        raise EligibilityError(f"{where}: {exc}") from None
    except TypeError as exc:
        raise EligibilityError(f"{where}: {exc}") from None


def timings_from_dict(doc: dict) -> dict[ServiceType, ServiceTiming]:
    out = {}
    for i, raw in enumerate(doc.get("timings", [])):
        t = _build(ServiceTiming, raw, f"timings[{i}]")
        out[t.service_type] = t
    return out


def default_timings() -> dict[ServiceType, ServiceTiming]:
    text = resources.files("flexcover").joinpath("data/service_timing.json").read_text("utf-8")
    return timings_from_dict(json.loads(text))


def load_programs(
    path: str | Path, timings: Mapping[ServiceType, ServiceTiming] | None = None
) -> list[tuple[ProgramRequirements, ServiceTiming]]:
    """Program catalog file: ``{"programs": [...]}``.

    A program may embed its own ``timing`` record; otherwise the default timing
    of its service type applies.
    """
    doc = _read_json(path, "program catalog")
    if not isinstance(doc, dict) or not isinstance(doc.get("programs"), list):
        raise EligibilityError(f"{path}: expected an object with a 'programs' list")
    timings = dict(timings or default_timings())
    out = []
    seen = set()
    for i, raw in enumerate(doc["programs"]):
        if not isinstance(raw, dict):
            raise EligibilityError(f"{path}: programs[{i}] must be an object")
        raw = dict(raw)
        timing_doc = raw.pop("timing", None)
        p = _build(ProgramRequirements, raw, f"{path}: programs[{i}]")
        if p.program_id in seen:
            raise EligibilityError(f"{path}: duplicate program id {p.program_id}")
        seen.add(p.program_id)
        if timing_doc is not None:
            t = _build(ServiceTiming, timing_doc, f"{path}: programs[{i}].timing")
        elif p.service_type in timings:
            t = timings[p.service_type]
        else:
            raise EligibilityError(f"{path}: no timing record for {p.service_type.value}")
        if t.service_type is not p.service_type:
            raise EligibilityError(
                f"{path}: program {p.program_id} is {p.service_type.value} "
                f"but its timing record is {t.service_type.value}"
            )
        out.append((p, t))
    return out


def load_building_profile(path: str | Path) -> BuildingProfile:
    """Building profile file; an optional ``inventory`` entry names an asset graph
    (resolved relative to the profile) from which presence flags are inferred."""
    doc = _read_json(path, "building profile")
    if not isinstance(doc, dict):
        raise EligibilityError(f"{path}: expected an object")
    doc = dict(doc)
    inv_path = doc.pop("inventory", None)
    if inv_path is None:
        return _build(BuildingProfile, doc, str(path))
    full = Path(path).parent / inv_path
    inv = load_inventory(full, doc.get("building_id", full.stem))
    return profile_from_inventory(inv, doc)


def report_records(reports: Sequence[EligibilityReport]) -> list[dict]:
    return [
        {
            "building_id": r.building_id,
            "program_id": r.program_id,
            "overall": r.overall.value,
            "verdicts": [
                {"requirement": v.requirement_name, "verdict": v.verdict.value, "reason": v.reason}
                for v in r.verdicts
            ],
        }
        for r in reports
    ]


def render_portfolio(reports: Sequence[EligibilityReport], fmt: str = "markdown") -> str:
    if fmt == "json":
        return json.dumps(report_records(reports), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["building_id", "program_id", "overall", "requirement", "verdict", "reason"])
        for r in reports:
            for v in r.verdicts:
                w.writerow([r.building_id, r.program_id, r.overall.value,
                            v.requirement_name, v.verdict.value, v.reason])
        return buf.getvalue()
    if fmt != "markdown":
        raise InputError(f"unknown format {fmt!r}")
    lines = ["| Program | Overall | Unsatisfied | Unknown |", "|---|---|---|---|"]
    for r in reports:
        bad = [v.requirement_name for v in r.verdicts if v.verdict is Verdict.Unsatisfied]
        unk = [v.requirement_name for v in r.verdicts if v.verdict is Verdict.Unknown]
        lines.append(f"| {r.program_id} | {r.overall.value} | {', '.join(bad) or '-'} | {', '.join(unk) or '-'} |")
    return "\n".join(lines) + "\n"
