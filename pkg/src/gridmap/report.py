"""Command-line entry point and report serialization.

Every subcommand renders one list of rows. The same rows feed the ``table``,
``csv`` and ``json`` formats, which is what keeps the numbers identical
across formats.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence, TextIO

from . import __version__
from .analytics import (
    Measure,
    StageDistribution,
    aggregate_stage,
    alert_criteria_counts,
    cause_share,
    cell_share,
    round6,
    sensitivity_compare,
    timeline,
)
from .config import (
    OVERRIDES_FILE,
    PROFILE_FILE,
    TAXONOMY_FILE,
    read_config_bytes,
    sha256,
)
from .errors import ConfigError, EmptyDistribution, EmptyResultError, GridmapError, InputError
from .ingest import EventDataset, dataset_to_csv, dump_dataset_json, load_dataset, read_dataset_json
from .mapping import Axis, Cause, load_mapping_profile, load_overrides
from .taxonomy import category_counts, load_taxonomy

__all__ = ["ReportRequest", "emit_flow_data", "run_cli", "main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_EMPTY = 4

SUBCOMMANDS = ("ingest", "categories", "map", "timeline", "sensitivity")


@dataclass(frozen=True)
class ReportRequest:
    subcommand: str
    datasets: tuple[str, ...]
    taxonomy: str | None = None
    profile: str | None = None
    overrides: str | None = None
    measure: Measure = Measure.ALL_EVENTS
    axes: tuple[Axis, ...] = (Axis.SCOPE,)
    years: tuple[int, int] | None = None
    fmt: str = "table"
    min_count: int = 0
    out: str | None = None
    strict: bool = True
    categories: tuple[str, ...] = ()
    flow: bool = False

    def __post_init__(self) -> None:
        if self.years is not None and self.years[0] > self.years[1]:
            raise ConfigError(f"--years start {self.years[0]} is after end {self.years[1]}")
        if self.min_count < 0:
            raise ConfigError("--min-count must be non-negative")
        if self.flow and self.fmt != "json":
            raise ConfigError("--flow output is JSON only; use --format json")


def _years(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("-")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-YYYY, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", action="append", required=True,
                        help="canonical dataset JSON, a normalized CSV, or a directory of CSVs (repeatable)")
    common.add_argument("--taxonomy", help="taxonomy config JSON")
    common.add_argument("--profile", help="mapping profile JSON")
    common.add_argument("--overrides", help="alert-criteria override JSON")
    common.add_argument("--measure", choices=[m.value for m in Measure], default="all")
    common.add_argument("--axis", action="append", choices=[a.value for a in Axis],
                        help="axis to aggregate (repeatable; default scope)")
    common.add_argument("--years", type=_years, help="inclusive year range YYYY-YYYY")
    common.add_argument("--format", dest="fmt", choices=("table", "csv", "json"), default="table")
    common.add_argument("--min-count", type=int, default=0,
                        help="only display categories with a count greater than N")
    common.add_argument("--out", help="write output here instead of stdout")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                      help="abort on any bad input row (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="skip bad input rows with a warning")

    parser = argparse.ArgumentParser(
        prog="gridmap", description="Map DOE-417 disturbance events onto disruption stages."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.add_parser("ingest", parents=[common], help="normalize input files into a canonical dataset")
    sub.add_parser("categories", parents=[common], help="event counts per category")
    m = sub.add_parser("map", parents=[common], help="stage distributions over one or more axes")
    m.add_argument("--flow", action="store_true", help="emit Sankey-style nodes/links instead")
    t = sub.add_parser("timeline", parents=[common], help="per-year counts for selected categories")
    t.add_argument("--category", action="append", default=[],
                   help="category to include (repeatable; default: three largest)")
    sub.add_parser("sensitivity", parents=[common],
                   help="event-type vs alert-criteria mapping comparison")
    return parser


def _request(ns: argparse.Namespace) -> ReportRequest:
    return ReportRequest(
        subcommand=ns.subcommand,
        datasets=tuple(ns.dataset),
        taxonomy=ns.taxonomy,
        profile=ns.profile,
        overrides=ns.overrides,
        measure=Measure(ns.measure),
        axes=tuple(dict.fromkeys(Axis(a) for a in ns.axis)) if ns.axis else (Axis.SCOPE,),
        years=ns.years,
        fmt=ns.fmt,
        min_count=ns.min_count,
        out=ns.out,
        strict=ns.strict,
        categories=tuple(getattr(ns, "category", ())),
        flow=getattr(ns, "flow", False),
    )


def _load_datasets(req: ReportRequest) -> EventDataset:
    csv_paths: list[Path] = []
    docs: list[EventDataset] = []
    for entry in req.datasets:
        p = Path(entry)
        if p.is_dir():
            csv_paths.extend(sorted(p.glob("*.csv")))
        elif p.suffix.lower() == ".json":
            try:
                text = p.read_text(encoding="utf-8")
            except OSError as exc:
                raise InputError(f"cannot read dataset: {exc.strerror or exc}", file=str(p)) from exc
            try:
                docs.append(read_dataset_json(text))
            except InputError as err:
                err.file = str(p)
                raise
        else:
            if not p.is_file():
                raise InputError("dataset file not found", file=str(p))
            csv_paths.append(p)
    parts = docs
    if csv_paths:
        parts = parts + [load_dataset(csv_paths, strict=req.strict)]
    if len(parts) == 1:
        ds = parts[0]
    else:
        ds = EventDataset(
            tuple(e for d in parts for e in d.events),
            tuple(p for d in parts for p in d.provenance),
            tuple(w for d in parts for w in d.ingest_warnings),
        )
    if req.years is not None:
        ds = ds.select_years(*req.years)
    return ds


class _Context:
    """Loaded configs plus the hashes that go into the provenance header."""

    def __init__(self, req: ReportRequest, dataset: EventDataset, need_profile: bool, need_overrides: bool):
        self.dataset = dataset
        self.hashes: dict[str, str] = {"dataset_sha256": sha256(dump_dataset_json(dataset).encode())}
        raw, _ = read_config_bytes(TAXONOMY_FILE, req.taxonomy)
        self.taxonomy = load_taxonomy(raw)
        self.hashes["taxonomy_sha256"] = sha256(raw)
        self.profile = None
        self.overrides = None
        if need_profile:
            raw, _ = read_config_bytes(PROFILE_FILE, req.profile)
            self.profile = load_mapping_profile(raw, self.taxonomy)
            self.hashes["profile_sha256"] = sha256(raw)
        if need_overrides:
            raw, _ = read_config_bytes(OVERRIDES_FILE, req.overrides)
            self.overrides = load_overrides(raw, self.taxonomy)
            self.hashes["overrides_sha256"] = sha256(raw)

    def provenance(self, req: ReportRequest) -> dict[str, Any]:
        head = {"tool": "gridmap", "version": __version__, "measure": req.measure.value}
        if req.years is not None:
            head["years"] = f"{req.years[0]}-{req.years[1]}"
        head.update(self.hashes)
        return head


@dataclass
class _Report:
    title: str
    columns: list[str]
    rows: list[list[Any]]
    extra: dict[str, Any]
    # json document; built from rows when None
    doc: dict[str, Any] | None = None


def _fmt_cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    if v is None:
        return ""
    return str(v)


def _render(report: _Report, fmt: str, provenance: dict[str, Any]) -> str:
    if fmt == "json":
        doc = report.doc
        if doc is None:
            doc = {"rows": [dict(zip(report.columns, r)) for r in report.rows]}
            doc.update(report.extra)
        doc = {"provenance": provenance, **doc}
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    head = [f"# {k}: {provenance[k]}" for k in sorted(provenance)]
    head += [f"# {k}: {_fmt_cell(v)}" for k, v in sorted(report.extra.items()) if not isinstance(v, (dict, list))]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(report.columns)
        for r in report.rows:
            w.writerow([_fmt_cell(v) for v in r])
        return "\n".join(head) + "\n" + buf.getvalue()

    cells = [[_fmt_cell(v) for v in r] for r in report.rows]
    widths = [max([len(c)] + [len(r[i]) for r in cells]) for i, c in enumerate(report.columns)]
    numeric = [all(isinstance(r[i], (int, float)) for r in report.rows) and report.rows for i in range(len(report.columns))]

    def line(vals: list[str]) -> str:
        return "  ".join(v.rjust(w) if num else v.ljust(w) for v, w, num in zip(vals, widths, numeric)).rstrip()

    out = [report.title, *head, "", line(report.columns), line(["-" * w for w in widths])]
    out += [line(r) for r in cells]
    return "\n".join(out) + "\n"


def emit_flow_data(distributions: Sequence[StageDistribution]) -> dict[str, Any]:
    """Nodes/links document for Sankey-style rendering.

    Each distribution contributes a stage node (``stage:<axis>``) and one node
    per cell (``<axis>:<cell>``). Links run from the stage node to each cell
    with nonzero mass and carry that mass.
    """
    if not distributions:
        raise EmptyDistribution("no distributions to emit")
    measures = {d.measure for d in distributions}
    if len(measures) != 1:
        raise ValueError("flow data needs distributions over a single measure")
    for d in distributions:
        if d.event_count == 0:
            raise EmptyDistribution(f"{d.axis.value} distribution has no events")

    nodes: dict[str, dict[str, Any]] = {}
    links: dict[tuple[str, str], float] = {}
    for d in distributions:
        stage = f"stage:{d.axis.value}"
        nodes.setdefault(stage, {"id": stage, "kind": "stage", "label": d.axis.value})
        for cell, mass in zip(d.cells, d.exact_masses):
            node = f"{d.axis.value}:{cell}"
            nodes.setdefault(node, {"id": node, "kind": "cell", "axis": d.axis.value, "label": cell})
            if mass:
                key = (stage, node)
                if key in links:
                    raise ValueError(f"axis {d.axis.value!r} given twice")
                links[key] = round6(mass)
    return {
        "measure": next(iter(measures)).value,
        "event_counts": {d.axis.value: d.event_count for d in distributions},
        "nodes": [nodes[k] for k in sorted(nodes)],
        "links": [{"source": s, "target": t, "value": v} for (s, t), v in sorted(links.items())],
    }


def _cmd_ingest(req: ReportRequest, ds: EventDataset) -> str | _Report:
    if req.fmt == "json":
        return dump_dataset_json(ds)
    if req.fmt == "csv":
        return dataset_to_csv(ds)
    rows = [[p.file, p.year, p.rows, p.rejected] for p in ds.provenance]
    return _Report(
        "Ingest summary",
        ["file", "year", "rows", "rejected"],
        rows,
        {"events": len(ds), "warnings": len(ds.ingest_warnings)},
    )


def _cmd_categories(req: ReportRequest, ctx: _Context) -> _Report:
    counts = category_counts(ctx.dataset, ctx.taxonomy, req.measure)
    total = sum(n for _, n in counts)
    rows = [
        [rank, cat.name, n, round6(n / total)]
        for rank, (cat, n) in enumerate(counts, start=1)
        if n > req.min_count
    ]
    return _Report(
        f"Event categories ({req.measure.value})",
        ["rank", "category", "count", "share"],
        rows,
        {"total_events": total, "categories_with_events": len(counts), "min_count": req.min_count},
    )


def _stage_json(d: StageDistribution) -> dict[str, Any]:
    doc = d.to_json()
    if d.event_count:
        doc["shares"] = {c: round6(cell_share(d, lambda x, c=c: x == c)) for c in d.cells}
        if d.axis.has_cause:
            doc["cause_share"] = {c.value: round6(cause_share(d, c)) for c in Cause}
    return doc


def _cmd_map(req: ReportRequest, ctx: _Context) -> _Report | dict:
    dists = [
        aggregate_stage(ctx.dataset, ctx.taxonomy, ctx.profile, ctx.overrides, req.measure, ax)
        for ax in req.axes
    ]
    if all(d.event_count == 0 for d in dists):
        raise EmptyDistribution(f"no events pass the {req.measure.value} measure")
    if req.flow:
        return {"flow": emit_flow_data(dists)}
    rows = []
    for d in dists:
        for cell, mass in zip(d.cells, d.exact_masses):
            share = round6(cell_share(d, lambda x, c=cell: x == c)) if d.event_count else 0.0
            rows.append([d.axis.value, cell, round6(mass), share])
    extra: dict[str, Any] = {}
    for d in dists:
        extra[f"{d.axis.value}_event_count"] = d.event_count
        if d.axis.has_cause and d.event_count:
            extra[f"{d.axis.value}_human_share"] = round6(cause_share(d, Cause.HUMAN))
    return _Report(
        f"Stage distribution ({req.measure.value})",
        ["axis", "cell", "mass", "share"],
        rows,
        extra,
        doc={"measure": req.measure.value, "distributions": [_stage_json(d) for d in dists]},
    )


def _cmd_timeline(req: ReportRequest, ctx: _Context) -> _Report:
    names = list(req.categories)
    if not names:
        names = [c.name for c, _ in category_counts(ctx.dataset, ctx.taxonomy)[:3]]
    if not names:
        raise EmptyDistribution("dataset has no events to build a timeline from")
    unknown = [n for n in names if n not in ctx.taxonomy.names]
    if unknown:
        raise ConfigError(f"unknown categories: {unknown}")
    series = timeline(ctx.dataset, ctx.taxonomy, names, req.years)
    rows = [[s.category, p.year, p.total, p.nonzero_customers] for s in series for p in s.points]
    return _Report("Timeline", ["category", "year", "total", "nonzero_customers"], rows, {})


def _cmd_sensitivity(req: ReportRequest, ctx: _Context) -> _Report:
    subset = ctx.dataset.select(lambda e: e.alert_criteria is not None)
    rep = sensitivity_compare(subset, ctx.taxonomy, ctx.profile, ctx.overrides, req.measure)
    rows = [
        [c.category, c.axis.value, c.cell, round6(c.event_type_mass),
         round6(c.alert_criteria_mass), round6(c.difference)]
        for c in rep.cells
    ]
    matches = []
    for rule in ctx.overrides:
        n = alert_criteria_counts(subset, ctx.taxonomy, [rule.criteria_pattern], rule.category)
        matches.append({"category": rule.category, "criteria_contains": rule.criteria_pattern,
                        "events": n[rule.criteria_pattern]})
    largest = "/".join(rep.largest_discrepancy) if rep.largest_discrepancy else None
    return _Report(
        f"Sensitivity: event type vs alert criteria ({req.measure.value})",
        ["category", "axis", "cell", "event_type_mass", "alert_criteria_mass", "difference"],
        rows,
        {
            "events": rep.event_count,
            "largest_discrepancy": largest,
            "largest_difference": round6(rep.max_difference),
            "override_matches": matches,
        },
    )


def _execute(req: ReportRequest) -> str:
    ds = _load_datasets(req)
    if req.subcommand == "ingest":
        result = _cmd_ingest(req, ds)
        if isinstance(result, str):
            return result
        prov = {"tool": "gridmap", "version": __version__,
                "dataset_sha256": sha256(dump_dataset_json(ds).encode())}
        return _render(result, req.fmt, prov)

    need_profile = req.subcommand in ("map", "sensitivity")
    need_overrides = req.subcommand == "sensitivity" or (req.subcommand == "map" and req.overrides is not None)
    ctx = _Context(req, ds, need_profile, need_overrides)
    handler = {
        "categories": _cmd_categories,
        "map": _cmd_map,
        "timeline": _cmd_timeline,
        "sensitivity": _cmd_sensitivity,
    }[req.subcommand]
    result = handler(req, ctx)
    if isinstance(result, dict):
        return json.dumps({"provenance": ctx.provenance(req), **result}, sort_keys=True, indent=2) + "\n"
    return _render(result, req.fmt, ctx.provenance(req))


def run_cli(args: Sequence[str], stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    """Run one invocation; returns the exit status."""
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        old_out, old_err = sys.stdout, sys.stderr
        sys.stdout, sys.stderr = stdout, stderr
        try:
            ns = parser.parse_args(list(args))
        finally:
            sys.stdout, sys.stderr = old_out, old_err
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG

    try:
        req = _request(ns)
        text = _execute(req)
    except ConfigError as err:
        print(f"gridmap: config error: {err}", file=stderr)
        return EXIT_CONFIG
    except InputError as err:
        print(f"gridmap: input error: {err}", file=stderr)
        return EXIT_INPUT
    except EmptyResultError as err:
        print(f"gridmap: empty result: {err}", file=stderr)
        return EXIT_EMPTY
    except ValueError as err:
        print(f"gridmap: invalid request: {err}", file=stderr)
        return EXIT_CONFIG
    except GridmapError as err:  # pragma: no cover - every subclass is handled above
        print(f"gridmap: {err}", file=stderr)
        return EXIT_CONFIG

    if req.out:
        Path(req.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
