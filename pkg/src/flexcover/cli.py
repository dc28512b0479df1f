"""Command-line front end: ``flexcover <command> [options]``.

Exit codes: 0 on success, 2 on bad input (missing files, malformed data, unknown
ids), 1 when an internal invariant fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .catalog import BUILTIN, IRClass, Stage, discovery_curve, fit_log_trend, load_catalog, query_irs
from .coverage import FORMATS, full_report, render_report
from .errors import InputError, InvariantError
from .extensions import (
    emit_ontology_text,
    generate_extensions,
    generate_iso_program_ontology,
    load_roadmap,
    minimality_report,
    verify_closure,
)
from .inventory import BRICK, DELTA, EFONT, canonical_ontology_id, load_inventory, merge_inventories
from .matching import build_matrix, load_overlay, load_synonyms
from .eligibility import assess_portfolio, load_building_profile, load_programs, render_portfolio, timings_from_dict

DATA_ENV = "FLEXCOVER_DATA_DIR"

# shipped inventory files per ontology id; several files under one id are merged
DEFAULT_INVENTORIES = (
    (BRICK, "inventories/brick.ttl"),
    (DELTA, "inventories/delta.ttl"),
    (DELTA, "inventories/openadr.ttl"),
    (EFONT, "inventories/efont.tsv"),
)


def data_dir() -> Path:
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("flexcover").joinpath("data")))


@dataclass
class RunConfig:
    catalog_path: str = BUILTIN
    inventories: list[tuple[str, str]] = field(default_factory=list)
    synonym_path: str | None = None
    overlay_path: str | None = None
    output_format: str = "markdown"
    output_path: str | None = None
    seed: int | None = None

    def resolved_inventories(self) -> list[tuple[str, Path]]:
        if self.inventories:
            return [(o, Path(p)) for o, p in self.inventories]
        root = data_dir()
        return [(o, root / rel) for o, rel in DEFAULT_INVENTORIES]

    def resolved_synonyms(self) -> Path:
        return Path(self.synonym_path) if self.synonym_path else data_dir() / "synonyms.tsv"

    def resolved_overlay(self) -> Path | None:
        if self.overlay_path is None:
            return None
        if self.overlay_path == BUILTIN:
            return data_dir() / "overlay.json"
        return Path(self.overlay_path)


def _parse_inventory_spec(spec: str) -> tuple[str, str]:
    oid, sep, path = spec.partition("=")
    if not sep or not oid or not path:
        raise argparse.ArgumentTypeError(f"expected ID=PATH, got {spec!r}")
    return canonical_ontology_id(oid), path


def _config(args) -> RunConfig:
    return RunConfig(
        catalog_path=args.catalog,
        inventories=list(args.inventory or []),
        synonym_path=args.synonyms,
        overlay_path=args.overlay,
        output_format=args.format or "markdown",
        output_path=args.out,
        seed=args.seed,
    )


def _load_inputs(cfg: RunConfig):
    catalog = load_catalog(cfg.catalog_path)
    merged: dict[str, object] = {}
    for oid, path in cfg.resolved_inventories():
        inv = load_inventory(path, oid)
        merged[oid] = merge_inventories(merged[oid], inv) if oid in merged else inv
    if not merged:
        raise InputError("at least one inventory is required")
    syn = load_synonyms(cfg.resolved_synonyms())
    overlay_path = cfg.resolved_overlay()
    overlay = load_overlay(overlay_path) if overlay_path else None
    return catalog, list(merged.values()), syn, overlay


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_coverage(args) -> int:
    cfg = _config(args)
    catalog, invs, syn, overlay = _load_inputs(cfg)
    m = build_matrix(catalog, invs, syn, overlay)
    report = full_report(m, catalog, overlay.denominator_overrides if overlay else None)
    _emit(render_report(report, cfg.output_format), cfg.output_path)
    return 0


def cmd_match(args) -> int:
    cfg = _config(args)
    catalog, invs, syn, overlay = _load_inputs(cfg)
    if args.ir_id not in catalog:
        raise InputError(f"unknown IR id {args.ir_id!r}")
    oid = canonical_ontology_id(args.ontology_id)
    if oid not in {i.ontology_id for i in invs}:
        raise InputError(f"ontology {oid!r} is not loaded")
    m = build_matrix(catalog, invs, syn, overlay)
    rec = m.get(args.ir_id, oid)
    ir = catalog.get(args.ir_id)
    lines = [
        f"{ir.id} ({ir.name}) vs {oid}: {'satisfied' if rec.satisfied else 'unsatisfied'}"
        f" [{rec.provenance}{', ' + rec.rule if rec.rule else ''}]"
    ]
    if rec.note:
        lines.append(f"  note: {rec.note}")
    if args.explain:
        for d in ir.components:
            hits = [ev for ev in rec.evidence if ev.descriptor == d]
            head = f"  - {d.phrase} ({d.kind_hint}):"
            if not hits:
                lines.append(f"{head} no match")
            for ev in hits:
                lines.append(f"{head} {ev.rule} {ev.matched_iri} via '{ev.matched_label}'")
    _emit("\n".join(lines) + "\n", cfg.output_path)
    return 0


def cmd_extend(args) -> int:
    cfg = _config(args)
    catalog, invs, syn, overlay = _load_inputs(cfg)
    out_dir = Path(args.out)
    ext_table, iso_table = load_roadmap(args.roadmap)
    m = build_matrix(catalog, invs, syn, overlay)
    ext = generate_extensions(m, catalog, ext_table)
    sets = [ext]
    files = {f"{ext.base_ontology.lower()}_extensions.ttl": emit_ontology_text(ext)}
    if args.include_iso:
        iso = generate_iso_program_ontology(iso_table)
        sets.append(iso)
        files[f"{iso.base_ontology.lower()}_program_ontology.ttl"] = emit_ontology_text(iso)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8")
    report = verify_closure(invs, sets, catalog, syn, overlay)
    closure = render_report(report, cfg.output_format)
    suffix = "md" if cfg.output_format == "markdown" else cfg.output_format
    (out_dir / f"closure.{suffix}").write_text(closure, encoding="utf-8")
    minimal = minimality_report(invs, ext, catalog, syn, overlay, extra=sets[1:])
    lines = [closure.rstrip("\n"), ""]
    for rid, lost in minimal.items():
        status = "load-bearing" if lost else "redundant"
        lines.append(f"proposal {rid}: {status}" + (f" ({len(lost)} IRs)" if lost else ""))
    if ext.unaddressed and not args.include_iso:
        lines.append("unaddressed by the roadmap: " + ", ".join(sorted(ext.unaddressed)))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_eligibility(args) -> int:
    root = data_dir()
    building = args.building or root / "demo" / "building.json"
    programs = args.programs or root / "demo" / "programs.json"
    timings = None
    if args.timings:
        try:
            timings = timings_from_dict(json.loads(Path(args.timings).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.timings}: line {exc.lineno}: {exc.msg}") from None
    b = load_building_profile(building)
    reports = assess_portfolio(b, load_programs(programs, timings))
    _emit(render_portfolio(reports, args.format or "markdown"), args.out)
    return 0


def _read_ordering(path: str) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def cmd_catalog_stats(args) -> int:
    catalog = load_catalog(args.catalog)
    ordering = _read_ordering(args.ordering) if args.ordering else None
    curve = discovery_curve(catalog, ordering)
    a, b, r2 = fit_log_trend(curve)
    classes = [(c.value, len(query_irs(catalog, class_filter=c))) for c in IRClass]
    stages = [(s.value, len(query_irs(catalog, stage_filter=s))) for s in Stage]
    summary = f"works={len(curve)} final={curve[-1][1] if curve else 0} a={a:.6f} b={b:.6f} r2={r2:.6f}"
    if args.format == "json":
        doc = {
            "classes": dict(classes),
            "stages": dict(stages),
            "curve": [{"works": k, "cumulative_irs": n} for k, n in curve],
            "fit": {"a": a, "b": b, "r2": r2},
        }
        text = json.dumps(doc, indent=2) + "\n"
    else:
        lines = ["class,count", *(f"{n},{k}" for n, k in classes), "",
                 "stage,count", *(f"{n},{k}" for n, k in stages), "",
                 "works,cumulative_irs", *(f"{k},{n}" for k, n in curve), "", summary]
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--catalog", default=BUILTIN, help="catalog file, or 'builtin'")
    common.add_argument("--inventory", action="append", type=_parse_inventory_spec, metavar="ID=PATH",
                        help="ontology inventory (.ttl or flat TSV); repeat the id to merge files")
    common.add_argument("--synonyms", help="synonym table (default: shipped table)")
    common.add_argument("--overlay", help="adjudication overlay file, or 'builtin' for the shipped one")
    common.add_argument("--format", choices=FORMATS, default=None,
                        help="output format (default: markdown; csv for catalog-stats)")
    common.add_argument("--out", help="output file (directory for 'extend')")
    common.add_argument("--seed", type=int, default=None, help="accepted for reproducible batch runs")

    parser = argparse.ArgumentParser(prog="flexcover", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coverage", parents=[common], help="per-class coverage report")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("match", parents=[common], help="satisfaction of one IR by one ontology")
    p.add_argument("ir_id")
    p.add_argument("ontology_id")
    p.add_argument("--explain", action="store_true", help="list evidence per descriptor")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("extend", parents=[common], help="write extension ontologies and a closure report")
    p.add_argument("--include-iso", action="store_true", help="also emit the program-requirements ontology")
    p.add_argument("--roadmap", default=BUILTIN, help="extension rule table (default: shipped)")
    p.set_defaults(func=cmd_extend)

    p = sub.add_parser("eligibility", parents=[common], help="assess a building against DR programs")
    p.add_argument("--building", help="building profile JSON (default: demo)")
    p.add_argument("--programs", help="program catalog JSON (default: demo)")
    p.add_argument("--timings", help="service timing JSON (default: shipped)")
    p.set_defaults(func=cmd_eligibility)

    p = sub.add_parser("catalog-stats", parents=[common], help="catalog counts and discovery curve")
    p.add_argument("--ordering", help="file with one work id per line")
    p.set_defaults(func=cmd_catalog_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "extend" and not args.out:
        parser.error("extend requires --out DIR")
    try:
        return args.func(args)
    except InvariantError as exc:
        print(f"flexcover: internal error: {exc}", file=sys.stderr)
        return 1
    except (InputError, OSError, ValueError) as exc:
        print(f"flexcover: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
