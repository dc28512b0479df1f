"""Ontology extensions that close the coverage gaps, and checks that they do.

Extensions are driven by a declarative rule table (``data/roadmap.json``): each
rule names the IRs it targets and the terms it adds. A rule produces a proposal
only when some of its targets are unsatisfied by every loaded ontology.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .catalog import BUILTIN, Catalog, IRClass
from .coverage import CoverageReport, full_report
from .errors import InputError, InvariantError
from .inventory import KINDS, OntologyInventory, Term, merge_inventories
from .matching import (
    AUTO,
    AdjudicationOverlay,
    SatisfactionMatrix,
    SatisfactionRecord,
    SynonymTable,
    build_matrix,
    evaluate_ir,
)
from .turtle import OWL, RDFS

ROADMAP_FILE = "roadmap.json"


@dataclass(frozen=True)
class ProposedTerm:
    iri: str
    kind: str
    label: str
    parent: str | None = None


@dataclass(frozen=True)
class ExtensionRule:
    id: str
    source_rule: str
    integration_note: str
    targets: frozenset[str]
    terms: tuple[ProposedTerm, ...]


@dataclass(frozen=True)
class RuleTable:
    base_ontology: str
    namespace: str
    rules: tuple[ExtensionRule, ...]


@dataclass(frozen=True)
class ExtensionProposal:
    rule_id: str
    new_terms: tuple[ProposedTerm, ...]
    target_ir_ids: frozenset[str]
    source_rule: str
    integration_note: str = ""

    def __post_init__(self):
        if not self.target_ir_ids:
            raise InvariantError(f"proposal {self.rule_id} has no target IRs")


@dataclass(frozen=True)
class ExtensionSet:
    proposals: tuple[ExtensionProposal, ...]
    base_ontology: str
    namespace: str = ""
    unaddressed: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        seen: set[str] = set()
        for p in self.proposals:
            for t in p.new_terms:
                if t.iri in seen:
                    raise InvariantError(f"two proposals define {t.iri}")
                seen.add(t.iri)

    def terms(self) -> list[ProposedTerm]:
        return [t for p in self.proposals for t in p.new_terms]

    def inventory(self, ontology_id: str | None = None) -> OntologyInventory:
        return OntologyInventory(
            ontology_id or self.base_ontology,
            {t.iri: _as_term(t) for t in sorted(self.terms(), key=lambda t: t.iri)},
        )

    def without(self, rule_id: str) -> "ExtensionSet":
        kept = tuple(p for p in self.proposals if p.rule_id != rule_id)
        return ExtensionSet(kept, self.base_ontology, self.namespace, self.unaddressed)


def _as_term(t: ProposedTerm) -> Term:
    return Term(t.iri, t.kind, frozenset({t.label}))


def _rule_table(doc: dict, where: str) -> RuleTable:
    try:
        base, ns, raw_rules = doc["base_ontology"], doc["namespace"], doc["rules"]
    except (KeyError, TypeError):
        raise InputError(f"{where}: expected base_ontology, namespace and rules") from None
    rules = []
    ids: set[str] = set()
    for i, r in enumerate(raw_rules):
        try:
            rid = r["id"]
            terms = []
            for tdoc in r["terms"]:
                kind = tdoc["kind"]
                if kind not in KINDS:
                    raise InputError(f"{where}: rule {rid}: unknown kind {kind!r}")
                parent = tdoc.get("parent")
                if parent and parent.startswith("#"):
                    parent = ns + parent[1:]
                terms.append(ProposedTerm(ns + tdoc["name"], kind, tdoc.get("label", tdoc["name"]), parent))
            rule = ExtensionRule(
                rid, r.get("source_rule", ""), r.get("integration_note", ""),
                frozenset(r["targets"]), tuple(terms),
            )
        except (KeyError, TypeError):
            raise InputError(f"{where}: rules[{i}] needs id, targets and terms") from None
        if rid in ids:
            raise InputError(f"{where}: duplicate rule id {rid}")
        ids.add(rid)
        rules.append(rule)
    return RuleTable(base, ns, tuple(rules))


def load_roadmap(path: str | Path = BUILTIN) -> tuple[RuleTable, RuleTable]:
    """Return the (ontology extension, program ontology) rule tables."""
    try:
        if str(path) == BUILTIN:
            text = resources.files("flexcover").joinpath("data").joinpath(ROADMAP_FILE).read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read roadmap {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "extension" not in doc or "program_ontology" not in doc:
        raise InputError(f"{path}: expected 'extension' and 'program_ontology' sections")
    return _rule_table(doc["extension"], str(path)), _rule_table(doc["program_ontology"], str(path))


def combined_unsatisfied(m: SatisfactionMatrix) -> set[str]:
    return {
        ir.id for ir in m.catalog.irs if not any(m.satisfied(ir.id, o) for o in m.ontologies)
    }


def generate_extensions(
    m: SatisfactionMatrix, catalog: Catalog | None = None, table: RuleTable | None = None
) -> ExtensionSet:
    """Proposals for every rule whose targets include a combined-unsatisfied IR.

    IRs that stay unsatisfied and no rule targets are listed in ``unaddressed``.
    """
    catalog = catalog or m.catalog
    if table is None:
        table = load_roadmap()[0]
    gaps = combined_unsatisfied(m)
    proposals = []
    covered: set[str] = set()
    for rule in table.rules:
        hit = rule.targets & gaps
        if not hit:
            continue
        proposals.append(
            ExtensionProposal(rule.id, rule.terms, frozenset(hit), rule.source_rule, rule.integration_note)
        )
        covered |= hit
    unaddressed = frozenset(ir.id for ir in catalog.irs if ir.id in gaps - covered)
    return ExtensionSet(tuple(proposals), table.base_ontology, table.namespace, unaddressed)


def generate_iso_program_ontology(table: RuleTable | None = None) -> ExtensionSet:
    """Skeleton program-requirements ontology: one group class and its fields per group."""
    if table is None:
        table = load_roadmap()[1]
    proposals = tuple(
        ExtensionProposal(r.id, r.terms, r.targets, r.source_rule, r.integration_note)
        for r in table.rules
    )
    return ExtensionSet(proposals, table.base_ontology, table.namespace)


def _ttl_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


_KIND_IRI = {
    "Class": "owl:Class",
    "ObjectProperty": "owl:ObjectProperty",
    "DataProperty": "owl:DatatypeProperty",
    "Individual": "owl:NamedIndividual",
}
_SAFE_LOCAL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _ref(iri: str, namespace: str) -> str:
    if namespace and iri.startswith(namespace) and _SAFE_LOCAL.fullmatch(iri[len(namespace):]):
        return "ext:" + iri[len(namespace):]
    return f"<{iri}>"


def emit_ontology_text(e: ExtensionSet) -> str:
    """Serialize an extension set as Turtle, one block per term in IRI order."""
    lines = [
        f"@prefix owl: <{OWL}> .",
        f"@prefix rdfs: <{RDFS}> .",
    ]
    if e.namespace:
        lines.append(f"@prefix ext: <{e.namespace}> .")
    notes = {t.iri: p.integration_note for p in e.proposals for t in p.new_terms}
    for t in sorted(e.terms(), key=lambda t: t.iri):
        if t.kind not in _KIND_IRI:
            raise InvariantError(f"cannot emit term {t.iri} of kind {t.kind}")
        parts = [f"a {_KIND_IRI[t.kind]}", f"rdfs:label {_ttl_string(t.label)}"]
        if t.parent:
            rel = "rdfs:subClassOf" if t.kind == "Class" else "rdfs:domain"
            parts.append(f"{rel} {_ref(t.parent, e.namespace)}")
        if notes.get(t.iri):
            parts.append(f"rdfs:comment {_ttl_string(notes[t.iri])}")
        lines.append("")
        lines.append(_ref(t.iri, e.namespace) + " " + " ;\n    ".join(parts) + " .")
    return "\n".join(lines) + "\n"


def _as_sets(e) -> list[ExtensionSet]:
    if isinstance(e, ExtensionSet):
        return [e]
    return list(e)


def extended_matrix(
    base_inventories: Sequence[OntologyInventory],
    e: ExtensionSet | Iterable[ExtensionSet],
    catalog: Catalog,
    syn: SynonymTable,
    overlay: AdjudicationOverlay | None = None,
) -> SatisfactionMatrix:
    """Satisfaction after merging extension terms into their base inventories.

    A cell becomes satisfied when it already was, or when the IR is satisfied by
    the extended inventory with at least one descriptor evidenced by a new term.
    Extension sets whose base is not loaded become inventories of their own.
    """
    sets = _as_sets(e)
    baseline = build_matrix(catalog, base_inventories, syn, overlay)
    invs = {inv.ontology_id: inv for inv in base_inventories}
    new_iris: dict[str, set[str]] = {}
    order = [inv.ontology_id for inv in base_inventories]
    for s in sets:
        ext = s.inventory()
        if s.base_ontology in invs:
            invs[s.base_ontology] = merge_inventories(invs[s.base_ontology], ext)
        else:
            invs[s.base_ontology] = ext
            order.append(s.base_ontology)
        new_iris.setdefault(s.base_ontology, set()).update(t.iri for t in s.terms())

    records: dict[tuple[str, str], SatisfactionRecord] = {}
    for o in order:
        added = new_iris.get(o, set())
        for ir in catalog.irs:
            old = baseline.records.get((ir.id, o))
            if not added and old is not None:
                records[(ir.id, o)] = old
                continue
            rec = evaluate_ir(ir, invs[o], syn)
            lifted = rec.satisfied and any(ev.matched_iri in added for ev in rec.evidence)
            if old is not None and (old.satisfied or not lifted):
                records[(ir.id, o)] = old
            else:
                records[(ir.id, o)] = SatisfactionRecord(
                    ir.id, o, lifted, rec.evidence, AUTO, rec.rule if lifted else None, rec.satisfied
                )
    return SatisfactionMatrix(catalog, tuple(order), records, baseline.overlay_applied)


def verify_closure(
    base_inventories: Sequence[OntologyInventory],
    e: ExtensionSet | Iterable[ExtensionSet],
    catalog: Catalog,
    syn: SynonymTable,
    overlay: AdjudicationOverlay | None = None,
    overrides: Mapping[IRClass, int] | None = None,
) -> CoverageReport:
    """Coverage report after applying the extensions.

    Denominator overrides are off by default: closed classes count every IR.
    """
    m = extended_matrix(base_inventories, e, catalog, syn, overlay)
    return full_report(m, catalog, overrides)


def minimality_report(
    base_inventories: Sequence[OntologyInventory],
    e: ExtensionSet,
    catalog: Catalog,
    syn: SynonymTable,
    overlay: AdjudicationOverlay | None = None,
    extra: Sequence[ExtensionSet] = (),
) -> dict[str, list[str]]:
    """For each proposal, the IRs left unsatisfied when only that proposal is dropped.

    An empty list marks a proposal that is not load-bearing.
    """
    full = extended_matrix(base_inventories, [e, *extra], catalog, syn, overlay)
    before = combined_unsatisfied(full)
    out = {}
    for p in e.proposals:
        m = extended_matrix(base_inventories, [e.without(p.rule_id), *extra], catalog, syn, overlay)
        out[p.rule_id] = sorted(combined_unsatisfied(m) - before)
    return out
