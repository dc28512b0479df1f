"""Ontology term inventories: the support sets that IRs are matched against."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InventoryError
from .turtle import OWL, RDF, RDF_TYPE, RDFS, RDFS_LABEL, Literal, Triple, parse_turtle

BRICK = "Brick"
DELTA = "DELTA"
EFONT = "EFOnt"
STANDARD_ONTOLOGIES = (BRICK, DELTA, EFONT)

KINDS = ("Class", "ObjectProperty", "DataProperty", "Individual", "Unknown")

_DECLARING_TYPES = {
    OWL + "Class": "Class",
    RDFS + "Class": "Class",
    OWL + "ObjectProperty": "ObjectProperty",
    OWL + "DatatypeProperty": "DataProperty",
    OWL + "NamedIndividual": "Individual",
}
# types that never become terms themselves when used as rdf:type objects
_META_TYPES = set(_DECLARING_TYPES) | {
    OWL + "Ontology",
    OWL + "AnnotationProperty",
    OWL + "Restriction",
    OWL + "Thing",
    RDF + "Property",
}
_KIND_RANK = {"Class": 3, "ObjectProperty": 3, "DataProperty": 3, "Individual": 2, "Unknown": 1}


def canonical_ontology_id(name: str) -> str:
    """Map case variants of the three standard ontologies onto one spelling."""
    for std in STANDARD_ONTOLOGIES:
        if name.lower() == std.lower():
            return std
    return name


def local_name(iri: str) -> str:
    """Substring after the last '#' or '/' (or ':' for prefixed identifiers)."""
    cut = max(iri.rfind("#"), iri.rfind("/"))
    if cut < 0:
        cut = iri.rfind(":")
    return iri[cut + 1 :]


@dataclass(frozen=True)
class Term:
    iri: str
    kind: str = "Unknown"
    labels: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.iri:
            raise InventoryError("term IRI must be non-empty")
        if self.kind not in KINDS:
            raise InventoryError(f"unknown term kind {self.kind!r} for {self.iri}")
        name = local_name(self.iri)
        if name and name not in self.labels:
            object.__setattr__(self, "labels", frozenset(self.labels | {name}))

    @property
    def local_name(self) -> str:
        return local_name(self.iri)


@dataclass(frozen=True)
class OntologyInventory:
    ontology_id: str
    terms: Mapping[str, Term] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, iri: object) -> bool:
        return iri in self.terms

    def __iter__(self):
        return iter(self.terms.values())

    def local_names(self) -> set[str]:
        return {t.local_name for t in self.terms.values()}


def inventory_from_terms(ontology_id: str, terms: Iterable[Term]) -> OntologyInventory:
    out: dict[str, Term] = {}
    for t in terms:
        if t.iri in out:
            raise InventoryError(f"duplicate iri {t.iri}")
        out[t.iri] = t
    return OntologyInventory(ontology_id, dict(sorted(out.items())))


def extract_inventory(triples: Iterable[Triple], ontology_id: str) -> OntologyInventory:
    """Collect declared classes, properties and individuals with their labels."""
    kinds: dict[str, set[str]] = defaultdict(set)
    labels: dict[str, set[str]] = defaultdict(set)
    referenced_types: set[str] = set()
    for t in triples:
        if t.predicate == RDF_TYPE and isinstance(t.object, str):
            declared = _DECLARING_TYPES.get(t.object)
            if declared:
                kinds[t.subject].add(declared)
            elif t.object not in _META_TYPES:
                kinds[t.subject].add("Individual")
                referenced_types.add(t.object)
        elif t.predicate == RDFS_LABEL and isinstance(t.object, Literal):
            labels[t.subject].add(t.object.lexical)
    for typ in referenced_types:
        kinds[typ].add("Unknown")

    terms = []
    for iri in sorted(kinds):
        # ties between equally specific kinds resolve alphabetically for determinism
        kind = max(sorted(kinds[iri]), key=lambda k: _KIND_RANK[k])
        terms.append(Term(iri, kind, frozenset(labels.get(iri, ()))))
    return inventory_from_terms(ontology_id, terms)


def load_turtle_inventory(path: str | Path, ontology_id: str) -> OntologyInventory:
    text = _read(path)
    return extract_inventory(parse_turtle(text), ontology_id)


def load_inventory_file(path: str | Path, ontology_id: str | None = None) -> OntologyInventory:
    """Read the flat tab-separated inventory format: ``iri<TAB>kind<TAB>label|label``."""
    text = _read(path)
    if ontology_id is None:
        ontology_id = Path(path).stem
    terms: dict[str, Term] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2 or len(cols) > 3:
            raise InventoryError(f"{path}: line {lineno}: expected 2 or 3 tab-separated columns")
        iri, kind = cols[0].strip(), cols[1].strip()
        if not iri:
            raise InventoryError(f"{path}: line {lineno}: empty iri")
        if kind not in KINDS:
            raise InventoryError(f"{path}: line {lineno}: unknown kind {kind!r}")
        if iri in terms:
            raise InventoryError(f"{path}: line {lineno}: duplicate iri {iri}")
        labels = [s.strip() for s in cols[2].split("|")] if len(cols) == 3 else []
        terms[iri] = Term(iri, kind, frozenset(s for s in labels if s))
    return OntologyInventory(ontology_id, dict(sorted(terms.items())))


def load_inventory(path: str | Path, ontology_id: str) -> OntologyInventory:
    """Load by extension: ``.ttl`` as Turtle, anything else as the flat format."""
    if str(path).lower().endswith(".ttl"):
        return load_turtle_inventory(path, ontology_id)
    return load_inventory_file(path, ontology_id)


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InventoryError(f"inventory file not found: {path}") from None
    except OSError as exc:
        raise InventoryError(f"cannot read inventory {path}: {exc}") from None


def _merge_kind(a: str, b: str) -> str | None:
    if a == b or b == "Unknown":
        return a
    if a == "Unknown":
        return b
    return None


def merge_inventories(
    a: OntologyInventory, b: OntologyInventory, ontology_id: str | None = None
) -> OntologyInventory:
    """Union of two inventories; labels union on collisions, non-Unknown kinds win.

    Raises :class:`InventoryError` listing every IRI with irreconcilable kinds.
    """
    merged = dict(a.terms)
    conflicts = []
    for iri, tb in b.terms.items():
        ta = merged.get(iri)
        if ta is None:
            merged[iri] = tb
            continue
        kind = _merge_kind(ta.kind, tb.kind)
        if kind is None:
            conflicts.append(f"{iri} ({ta.kind} vs {tb.kind})")
            continue
        merged[iri] = Term(iri, kind, ta.labels | tb.labels)
    if conflicts:
        raise InventoryError("kind conflict: " + "; ".join(conflicts))
    return OntologyInventory(ontology_id or a.ontology_id, dict(sorted(merged.items())))

