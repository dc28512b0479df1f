"""Shared test helpers: shipped-data loaders, random instance builders and
brute-force oracles written independently of the package internals."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from flexcover.catalog import (
    Catalog,
    ConceptDescriptor,
    InformationalRequirement,
    IRClass,
    SourceWork,
    Stage,
)
from flexcover.cli import DEFAULT_INVENTORIES, data_dir
from flexcover.eligibility import BuildingProfile, ProgramRequirements, ServiceTiming, ServiceType
from flexcover.inventory import OntologyInventory, Term, load_inventory, merge_inventories
from flexcover.matching import SatisfactionMatrix, SatisfactionRecord

VOCAB = ["air", "flow", "sensor", "meter", "zone", "temp", "set", "point", "power", "has",
         "rate", "VAV", "HVAC", "load", "event", "price", "x2", "Ab"]
KINDS = ["Class", "ObjectProperty", "DataProperty", "Individual", "Unknown"]
HINTS = ["Any", "Any", "Class", "DataProperty", "ObjectProperty"]


def shipped_inventories() -> list[OntologyInventory]:
    merged = {}
    for oid, rel in DEFAULT_INVENTORIES:
        inv = load_inventory(data_dir() / rel, oid)
        merged[oid] = merge_inventories(merged[oid], inv) if oid in merged else inv
    return list(merged.values())


# phrase rendering -----------------------------------------------------------


def render_phrase(tokens: list[str], rng: random.Random) -> str:
    style = rng.choice(["space", "snake", "camel", "pascal", "kebab", "upper"])
    if style == "space":
        return " ".join(tokens)
    if style == "snake":
        return "_".join(t.capitalize() if rng.random() < 0.5 else t for t in tokens)
    if style == "camel":
        return tokens[0].lower() + "".join(t[:1].upper() + t[1:] for t in tokens[1:])
    if style == "pascal":
        return "".join(t[:1].upper() + t[1:] for t in tokens)
    if style == "kebab":
        return "-".join(tokens)
    return " ".join(t.upper() for t in tokens)


def random_phrase(rng: random.Random, max_tokens: int = 3) -> str:
    return render_phrase([rng.choice(VOCAB) for _ in range(rng.randint(1, max_tokens))], rng)


def make_catalog(irs_spec, works=("w1",)) -> Catalog:
    """irs_spec: iterable of (id, IRClass, [(phrase, hint), ...])."""
    irs = tuple(
        InformationalRequirement(
            ir_id, ir_id, cls, frozenset({Stage.EnrollmentQualification}),
            tuple(ConceptDescriptor(p, h) for p, h in comps), frozenset({works[0]}),
        )
        for ir_id, cls, comps in irs_spec
    )
    return Catalog(irs, tuple(SourceWork(w, w) for w in works), "test")


def random_matching_instance(rng: random.Random):
    """(catalog, inventory, synonym pairs) with <=10 IRs, <=30 terms, <=20 pairs."""
    spec = []
    for i in range(rng.randint(1, 10)):
        comps = [(random_phrase(rng), rng.choice(HINTS)) for _ in range(rng.randint(1, 3))]
        spec.append((f"ir{i}", rng.choice(list(IRClass)), comps))
    terms = {}
    for i in range(rng.randint(0, 30)):
        iri = f"http://x.example/ns#{render_phrase([rng.choice(VOCAB)], rng)}{i}"
        labels = frozenset(random_phrase(rng) for _ in range(rng.randint(0, 2)))
        terms[iri] = Term(iri, rng.choice(KINDS), labels)
    pairs = [(random_phrase(rng), random_phrase(rng)) for _ in range(rng.randint(0, 20))]
    return make_catalog(spec), OntologyInventory("O", dict(sorted(terms.items()))), pairs


# matching oracle ------------------------------------------------------------


def oracle_tokens(s: str) -> list[str]:
    """Character-walk tokenizer: break on non-alphanumerics and lower->upper steps."""
    out, cur, prev = [], "", ""
    for ch in s:
        if not ch.isalnum():
            if cur:
                out.append(cur)
            cur, prev = "", ""
            continue
        if prev and "a" <= prev <= "z" and "A" <= ch <= "Z":
            out.append(cur)
            cur = ""
        cur += ch
        prev = ch
    if cur:
        out.append(cur)
    return [t.casefold() for t in out]


def oracle_key(s: str) -> tuple[str, ...]:
    return tuple(oracle_tokens(s))


def oracle_evidence(ir, inv: OntologyInventory, pairs) -> tuple[bool, set]:
    """Exhaustively test every descriptor against every label and synonym pair."""
    found = set()
    ok = True
    for d in ir.components:
        key = oracle_key(d.phrase)
        alt = set()
        for p, q in pairs:
            if oracle_key(p) == key:
                alt.add(oracle_key(q))
            if oracle_key(q) == key:
                alt.add(oracle_key(p))
        hit = False
        for term in inv.terms.values():
            if d.kind_hint != "Any" and term.kind != d.kind_hint:
                continue
            keys = [oracle_key(lbl) for lbl in term.labels]
            if key and key in keys:
                found.add((d.phrase, term.iri, "Direct"))
                hit = True
            elif key and any(k in alt for k in keys):
                found.add((d.phrase, term.iri, "Synonym"))
                hit = True
        ok = ok and hit
    return ok and bool(ir.components), found


# coverage oracle ------------------------------------------------------------


def oracle_percent(k: int, d: int) -> int:
    q = Fraction(100 * k, d)
    n = math.floor(q)
    return n + 1 if q - n >= Fraction(1, 2) else n


def random_matrix(rng: random.Random, n_ontologies: int | None = None) -> SatisfactionMatrix:
    spec = []
    i = 0
    for cls in IRClass:
        for _ in range(rng.randint(1, 6)):
            spec.append((f"ir{i}", cls, [("x", "Any")]))
            i += 1
    catalog = make_catalog(spec)
    onts = tuple(f"O{j}" for j in range(n_ontologies or rng.randint(1, 4)))
    p = rng.random()
    records = {
        (ir.id, o): SatisfactionRecord(ir.id, o, rng.random() < p)
        for ir in catalog.irs
        for o in onts
    }
    return SatisfactionMatrix(catalog, onts, records)


# eligibility ----------------------------------------------------------------


def _maybe(rng, fn, p=0.6):
    return fn() if rng.random() < p else None


def random_program(rng: random.Random, pid: str = "p") -> ProgramRequirements:
    metering = rng.random() < 0.6
    telemetry = rng.random() < 0.5
    return ProgramRequirements(
        program_id=pid,
        service_type=rng.choice(list(ServiceType)),
        min_resource_size_kw=_maybe(rng, lambda: float(rng.randint(0, 500))),
        min_reduction_kw=_maybe(rng, lambda: float(rng.randint(0, 500))),
        availability_window=_maybe(rng, lambda: "weekdays", 0.2),
        aggregation_allowed=rng.random() < 0.5,
        after_the_fact_metering_required=metering,
        meter_interval_s=_maybe(rng, lambda: rng.choice([60, 300, 900, 3600])) if metering else None,
        meter_accuracy_pct=_maybe(rng, lambda: rng.choice([0.5, 1.0, 2.0])) if metering else None,
        meter_reporting_deadline_h=_maybe(rng, lambda: 48.0) if metering else None,
        telemetry_required=telemetry,
        comm_protocols=frozenset(rng.sample(["BACnet", "OpenADR", "DNP3", "Modbus"], rng.randint(0, 2)))
        if telemetry else frozenset(),
        telemetry_interval_s=_maybe(rng, lambda: rng.choice([2, 4, 10, 60])) if telemetry else None,
        telemetry_accuracy_pct=_maybe(rng, lambda: rng.choice([0.5, 1.0, 2.0])) if telemetry else None,
        advance_notification_min=_maybe(rng, lambda: float(rng.randint(0, 1440))),
        lead_time_min=_maybe(rng, lambda: float(rng.randint(0, 60))),
        sustained_response_min=_maybe(rng, lambda: float(rng.randint(1, 240))),
        recovery_period_min=_maybe(rng, lambda: float(rng.randint(0, 120))),
        non_participation_notice=rng.random() < 0.3,
    )


def random_timing(rng: random.Random, service: ServiceType) -> ServiceTiming:
    lo = _maybe(rng, lambda: float(rng.randint(0, 10)))
    hi = _maybe(rng, lambda: float(rng.randint(10, 60)))
    slo = _maybe(rng, lambda: float(rng.randint(0, 30)))
    shi = _maybe(rng, lambda: float(rng.randint(30, 900)))
    return ServiceTiming(service, lo, hi, slo, shi)


def random_building(rng: random.Random, bid: str = "b") -> BuildingProfile:
    metering = rng.random() < 0.7
    telemetry = rng.random() < 0.6
    return BuildingProfile(
        building_id=bid,
        shed_capability_kw=_maybe(rng, lambda: float(rng.randint(0, 500))),
        metering_present=metering,
        meter_interval_s=_maybe(rng, lambda: rng.choice([60, 300, 900, 3600])) if metering else None,
        meter_accuracy_pct=_maybe(rng, lambda: rng.choice([0.5, 1.0, 2.0, 5.0])) if metering else None,
        telemetry_present=telemetry,
        telemetry_protocols=frozenset(rng.sample(["bacnet", "OpenADR", "MQTT", "dnp3"], rng.randint(0, 2))),
        telemetry_interval_s=_maybe(rng, lambda: rng.choice([2, 4, 10, 60])) if telemetry else None,
        telemetry_accuracy_pct=_maybe(rng, lambda: rng.choice([0.5, 1.0, 2.0])) if telemetry else None,
        fastest_ramp_min=_maybe(rng, lambda: float(rng.randint(0, 40))),
        max_sustain_min=_maybe(rng, lambda: float(rng.randint(0, 300))),
        in_aggregation=rng.random() < 0.3,
    )


S, X, U = "Satisfied", "Unsatisfied", "Unknown"


def _ge(have, need):
    return U if have is None else (S if have >= need else X)


def _le(have, need):
    return U if have is None else (S if have <= need else X)


def oracle_assess(b: BuildingProfile, p: ProgramRequirements, t: ServiceTiming) -> list[tuple[str, str]]:
    """Rule-by-rule reference evaluator; returns (requirement, verdict) pairs."""
    rules = [
        ("min_resource_size", p.min_resource_size_kw is not None,
         lambda: S if (p.aggregation_allowed and b.in_aggregation)
         else _ge(b.shed_capability_kw, p.min_resource_size_kw)),
        ("min_reduction", p.min_reduction_kw is not None,
         lambda: _ge(b.shed_capability_kw, p.min_reduction_kw)),
        ("availability", bool(p.availability_window), lambda: U),
        ("after_the_fact_metering", p.after_the_fact_metering_required,
         lambda: S if b.metering_present else X),
        ("meter_interval", p.meter_interval_s is not None,
         lambda: X if not b.metering_present else _le(b.meter_interval_s, p.meter_interval_s)),
        ("meter_accuracy", p.meter_accuracy_pct is not None,
         lambda: X if not b.metering_present else _le(b.meter_accuracy_pct, p.meter_accuracy_pct)),
        ("telemetry", p.telemetry_required, lambda: S if b.telemetry_present else X),
        ("communication_protocol", bool(p.comm_protocols),
         lambda: U if not b.telemetry_protocols else (
             S if {x.lower() for x in b.telemetry_protocols} & {x.lower() for x in p.comm_protocols} else X)),
        ("telemetry_interval", p.telemetry_interval_s is not None,
         lambda: X if not b.telemetry_present else _le(b.telemetry_interval_s, p.telemetry_interval_s)),
        ("telemetry_accuracy", p.telemetry_accuracy_pct is not None,
         lambda: X if not b.telemetry_present else _le(b.telemetry_accuracy_pct, p.telemetry_accuracy_pct)),
        ("ramp", p.lead_time_min is not None or t.ramp_min_hi is not None,
         lambda: _le(b.fastest_ramp_min,
                     min(x for x in (p.lead_time_min, t.ramp_min_hi) if x is not None))),
        ("sustained_response", p.sustained_response_min is not None,
         lambda: _ge(b.max_sustain_min, p.sustained_response_min)),
    ]
    return [(name, fn()) for name, applies, fn in rules if applies]


def oracle_overall(verdicts: list[str]) -> str:
    if X in verdicts:
        return "Ineligible"
    if U in verdicts:
        return "NeedsData"
    return "Eligible"


# acceptance lines collected during the run, echoed in the terminal summary
RESULTS: list[str] = []
