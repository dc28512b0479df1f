"""Satisfaction of IR component sets by ontology inventories.

An IR is satisfied by an inventory when every descriptor of its component set
matches at least one term, either directly (normalized tokens equal) or through
a curated synonym table. Manual judgments can be layered on top with an
:class:`AdjudicationOverlay`.
"""

from __future__ import annotations

import functools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import Catalog, ConceptDescriptor, InformationalRequirement, IRClass
from .errors import InputError, OverlayError
from .inventory import OntologyInventory, canonical_ontology_id

DIRECT = "Direct"
SYNONYM = "Synonym"
COMPOSITE = "Composite"
_RULE_PRIORITY = {DIRECT: 0, SYNONYM: 1}

AUTO = "Auto"
ADJUDICATED = "Adjudicated"

_CAMEL = re.compile(r"(?<=[a-z])(?=[A-Z])")
_SEPARATORS = re.compile(r"[\W_]+")


@functools.lru_cache(maxsize=65536)
def _normalize(phrase: str) -> tuple[str, ...]:
    spaced = _CAMEL.sub(" ", phrase)
    return tuple(tok.casefold() for tok in _SEPARATORS.split(spaced) if tok)


def normalize(phrase: str) -> list[str]:
    """Case-folded tokens split on separators and lower-to-upper camelCase boundaries.

    >>> normalize("hasSamplingRate")
    ['has', 'sampling', 'rate']
    """
    return list(_normalize(phrase))


def phrase_key(phrase: str) -> str:
    return " ".join(_normalize(phrase))


@dataclass(frozen=True)
class SynonymTable:
    """Symmetric map between normalized phrases."""

    entries: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "SynonymTable":
        acc: dict[str, set[str]] = {}
        for a, b in pairs:
            ka, kb = phrase_key(a), phrase_key(b)
            if not ka or not kb or ka == kb:
                continue
            acc.setdefault(ka, set()).add(kb)
            acc.setdefault(kb, set()).add(ka)
        return cls({k: frozenset(v) for k, v in sorted(acc.items())})

    def synonyms(self, phrase: str) -> frozenset[str]:
        return self.entries.get(phrase_key(phrase), frozenset())

    def __len__(self) -> int:
        return len(self.entries)


def load_synonyms(path: str | Path) -> SynonymTable:
    """Read ``phrase<TAB>phrase`` lines; '#' starts a comment line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read synonym table {path}: {exc}") from None
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
            raise InputError(f"{path}: line {lineno}: expected 'phrase<TAB>phrase'")
        pairs.append((cols[0].strip(), cols[1].strip()))
    return SynonymTable.from_pairs(pairs)


@dataclass(frozen=True)
class MatchEvidence:
    descriptor: ConceptDescriptor
    matched_iri: str
    rule: str
    matched_label: str


@dataclass(frozen=True)
class SatisfactionRecord:
    ir_id: str
    ontology_id: str
    satisfied: bool
    evidence: tuple[MatchEvidence, ...] = ()
    provenance: str = AUTO
    rule: str | None = None
    auto_satisfied: bool | None = None
    note: str = ""


@dataclass(frozen=True)
class Pin:
    satisfied: bool
    note: str = ""
    basis: str = ""


@dataclass(frozen=True)
class AdjudicationOverlay:
    pins: Mapping[tuple[str, str], Pin] = field(default_factory=dict)
    denominator_overrides: Mapping[IRClass, int] = field(default_factory=dict)
    version: str = ""

    def ontologies(self) -> set[str]:
        return {o for _, o in self.pins}


def overlay_from_dict(doc: dict) -> AdjudicationOverlay:
    if not isinstance(doc, dict):
        raise OverlayError("overlay root must be an object")
    pins: dict[tuple[str, str], Pin] = {}
    for i, raw in enumerate(doc.get("pins", [])):
        try:
            key = (str(raw["ir_id"]), canonical_ontology_id(str(raw["ontology"])))
            value = raw["satisfied"]
        except (KeyError, TypeError):
            raise OverlayError(f"pins[{i}]: expected ir_id, ontology and satisfied") from None
        if not isinstance(value, bool):
            raise OverlayError(f"pins[{i}]: 'satisfied' must be a boolean")
        if key in pins:
            raise OverlayError(f"pins[{i}]: duplicate pin for {key[0]} / {key[1]}")
        pins[key] = Pin(value, str(raw.get("note", "")), str(raw.get("basis", "")))
    overrides: dict[IRClass, int] = {}
    for name, value in (doc.get("denominator_overrides") or {}).items():
        try:
            cls = IRClass(name)
        except ValueError:
            raise OverlayError(f"denominator override for unknown class {name!r}") from None
        if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
            raise OverlayError(f"denominator override for {name} must be a positive integer")
        overrides[cls] = value
    return AdjudicationOverlay(pins, overrides, str(doc.get("version", "")))


def load_overlay(path: str | Path) -> AdjudicationOverlay:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OverlayError(f"cannot read overlay {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise OverlayError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return overlay_from_dict(doc)


def match_descriptor(
    d: ConceptDescriptor, inv: OntologyInventory, syn: SynonymTable
) -> list[MatchEvidence]:
    """All terms of ``inv`` matching ``d``, Direct before Synonym, then by IRI."""
    key = phrase_key(d.phrase)
    if not key:
        return []
    alternates = syn.entries.get(key, frozenset())
    found = []
    for term in inv.terms.values():
        if d.kind_hint != "Any" and term.kind != d.kind_hint:
            continue
        best = None
        for label in sorted(term.labels):
            lk = phrase_key(label)
            if lk == key:
                best = (DIRECT, label)
                break
            if best is None and lk in alternates:
                best = (SYNONYM, label)
        if best:
            found.append(MatchEvidence(d, term.iri, best[0], best[1]))
    found.sort(key=lambda e: (_RULE_PRIORITY[e.rule], e.matched_iri))
    return found


def evaluate_ir(
    ir: InformationalRequirement, inv: OntologyInventory, syn: SynonymTable
) -> SatisfactionRecord:
    """R(IR, S_O): satisfied iff every component descriptor has a match."""
    evidence: list[MatchEvidence] = []
    satisfied = bool(ir.components)
    for d in ir.components:
        hits = match_descriptor(d, inv, syn)
        if not hits:
            satisfied = False
        evidence.extend(hits)
    rule = None
    if satisfied:
        if len(ir.components) > 1:
            rule = COMPOSITE
        else:
            rule = evidence[0].rule
    return SatisfactionRecord(
        ir_id=ir.id,
        ontology_id=inv.ontology_id,
        satisfied=satisfied,
        evidence=tuple(evidence),
        provenance=AUTO,
        rule=rule,
        auto_satisfied=satisfied,
    )


@dataclass(frozen=True)
class SatisfactionMatrix:
    catalog: Catalog
    ontologies: tuple[str, ...]
    records: Mapping[tuple[str, str], SatisfactionRecord]
    overlay_applied: bool = False

    def get(self, ir_id: str, ontology_id: str) -> SatisfactionRecord:
        return self.records[(ir_id, ontology_id)]

    def satisfied(self, ir_id: str, ontology_id: str) -> bool:
        return self.records[(ir_id, ontology_id)].satisfied

    def is_complete(self) -> bool:
        return all((ir.id, o) in self.records for ir in self.catalog.irs for o in self.ontologies)


def check_overlay(overlay: AdjudicationOverlay, catalog: Catalog, ontologies: Iterable[str]) -> None:
    known = set(ontologies)
    for ir_id, ont in overlay.pins:
        if ir_id not in catalog:
            raise OverlayError(f"overlay pins unknown IR id {ir_id!r}")
        if ont not in known:
            raise OverlayError(f"overlay pins unknown ontology {ont!r} (loaded: {', '.join(sorted(known))})")


def build_matrix(
    catalog: Catalog,
    inventories: Sequence[OntologyInventory],
    syn: SynonymTable,
    overlay: AdjudicationOverlay | None = None,
) -> SatisfactionMatrix:
    """Evaluate every (IR, ontology) pair, then apply overlay pins."""
    ids = [inv.ontology_id for inv in inventories]
    if len(set(ids)) != len(ids):
        raise InputError(f"duplicate ontology ids: {ids}")
    if overlay is not None:
        check_overlay(overlay, catalog, ids)
    records: dict[tuple[str, str], SatisfactionRecord] = {}
    for inv in inventories:
        for ir in catalog.irs:
            rec = evaluate_ir(ir, inv, syn)
            pin = overlay.pins.get((ir.id, inv.ontology_id)) if overlay else None
            if pin is not None:
                rec = SatisfactionRecord(
                    ir_id=ir.id,
                    ontology_id=inv.ontology_id,
                    satisfied=pin.satisfied,
                    evidence=rec.evidence,
                    provenance=ADJUDICATED,
                    rule=rec.rule if pin.satisfied == rec.satisfied else None,
                    auto_satisfied=rec.satisfied,
                    note=pin.note,
                )
            records[(ir.id, inv.ontology_id)] = rec
    return SatisfactionMatrix(catalog, tuple(ids), records, overlay is not None)


@dataclass(frozen=True)
class OntologyAgreement:
    ontology_id: str
    true_positive: int
    false_positive: int
    false_negative: int
    true_negative: int
    precision: float
    recall: float
    precision_defined: bool
    recall_defined: bool


@dataclass(frozen=True)
class AgreementReport:
    per_ontology: tuple[OntologyAgreement, ...]
    disagreements: tuple[tuple[str, str, bool, bool], ...]  # (ir_id, ontology, auto, pinned)

    def for_ontology(self, ontology_id: str) -> OntologyAgreement:
        for a in self.per_ontology:
            if a.ontology_id == ontology_id:
                return a
        raise KeyError(ontology_id)


def compare_auto_vs_overlay(
    matrix_auto: SatisfactionMatrix, overlay: AdjudicationOverlay
) -> AgreementReport:
    """Precision/recall of automatic satisfied=true judgments against the pins.

    An undefined ratio (no positives on that side) is reported as 1.0 with its
    ``*_defined`` flag cleared.
    """
    per = []
    disagreements = []
    for ont in matrix_auto.ontologies:
        tp = fp = fn = tn = 0
        for ir in matrix_auto.catalog.irs:
            pin = overlay.pins.get((ir.id, ont))
            if pin is None:
                continue
            rec = matrix_auto.records[(ir.id, ont)]
            auto = rec.auto_satisfied if rec.auto_satisfied is not None else rec.satisfied
            if auto and pin.satisfied:
                tp += 1
            elif auto:
                fp += 1
            elif pin.satisfied:
                fn += 1
            else:
                tn += 1
            if auto != pin.satisfied:
                disagreements.append((ir.id, ont, auto, pin.satisfied))
        p_def, r_def = tp + fp > 0, tp + fn > 0
        per.append(
            OntologyAgreement(
                ont, tp, fp, fn, tn,
                tp / (tp + fp) if p_def else 1.0,
                tp / (tp + fn) if r_def else 1.0,
                p_def, r_def,
            )
        )
    return AgreementReport(tuple(per), tuple(disagreements))
