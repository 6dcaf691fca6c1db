"""``carrierforge`` batch front-end.

Every command reads one config, runs to completion and writes flat files
into ``--out``: ``report.json`` plus CSV length traces. Reports contain no
timestamps or timings, so re-running a command with the same config and
seed reproduces them byte for byte.

Exit status: 0 on success (collapses and cusp escapes are results, not
failures), 1 for usage or config errors, 2 when an internal invariant
breaks, including a failing property suite under ``verify``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from pydantic import ValidationError

from . import carrier, shorten, suites, symmetry
from .carrier import DevelopedCarrierGraph
from .config import ContractSpec, ExperimentConfig, GroupSpec, load_config, matrix_to_doc
from .hyp3 import GeometryError, Point3
from .kleinian import GroupPresentation, WordError
from .rng import SplitMix64

log = logging.getLogger("carrierforge")

COMMANDS = ("optimize", "contract", "enumerate2", "orbit", "verify")
STRICT_DECREASE = 1e-6


class UsageError(Exception):
    """Bad command line or config; exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carrierforge", description="Minimal carrier graphs in hyperbolic 3-manifolds.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="experiment config (JSON); optional for verify")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--max-iter", type=int, help="override optimizer.max_iterations")
    p.add_argument("--word-len", type=int, help="override params.max_word_len")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


# ---------------------------------------------------------------------------
# documents

def _clean(obj: Any) -> Any:
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path: Path, doc: Any) -> None:
    path.write_text(json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n")


def write_trace(path: Path, report: shorten.OptimizationReport) -> None:
    g = report.gradient_trace
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "length", "gradientNorm"])
        for i, length in enumerate(report.length_trace):
            w.writerow([i, repr(length), repr(g[i]) if i < len(g) else "nan"])


def group_document(group: GroupPresentation) -> dict[str, Any]:
    return {
        "generators": [matrix_to_doc(g) for g in group.generators],
        "names": list(group.names),
        "relators": [r.to_signed() for r in group.relators],
    }


def graph_entry(cg: DevelopedCarrierGraph) -> dict[str, Any]:
    return {
        "graph": carrier.to_document(cg),
        "certificate": carrier.validate(cg).to_dict(),
        "surjectivity": carrier.surjectivity_status(cg),
    }


def run_document(report: shorten.OptimizationReport, trace_name: str | None) -> dict[str, Any]:
    doc = {
        "termination_reason": report.termination_reason,
        "event": report.event,
        "iterations": len(report.length_trace) - 1,
        "initial_length": report.length_trace[0],
        "final_length": report.length,
        "gradient_norm": report.gradient_norm,
        "final_graph": carrier.to_document(report.final_graph),
        "certificate": report.certificate.to_dict(),
        "surjectivity": carrier.surjectivity_status(report.final_graph),
    }
    if trace_name:
        doc["trace"] = trace_name
    return doc


def reingest(report: dict[str, Any], graph_doc: dict[str, Any]) -> DevelopedCarrierGraph:
    """Rebuild a graph stored in a report from the report alone."""
    group = GroupSpec.model_validate(report["group"]).build()
    return carrier.from_document(graph_doc, group)


# ---------------------------------------------------------------------------
# commands

def _need(cfg: ExperimentConfig, *sections: str) -> None:
    missing = [s for s in sections if getattr(cfg, s) is None]
    if missing:
        raise UsageError(f"config lacks required section(s): {', '.join(missing)}")


def _prepare_graph(cfg: ExperimentConfig, group: GroupPresentation) -> DevelopedCarrierGraph:
    return cfg.graph.build(group, cfg.seed, cfg.optimizer.jitter)


def _optimize(cg: DevelopedCarrierGraph, cfg: ExperimentConfig) -> list[shorten.OptimizationReport]:
    ocfg = cfg.optimizer_config()
    if cfg.params.follow_collapses:
        return shorten.optimize_with_collapses(cg, ocfg)
    return [shorten.optimize_positions(cg, ocfg)]


def _write_runs(out: Path, runs, stem: str) -> list[dict[str, Any]]:
    docs = []
    for k, rep in enumerate(runs):
        name = f"{stem}.csv" if k == 0 else f"{stem}_{k}.csv"
        write_trace(out / name, rep)
        docs.append(run_document(rep, name))
    return docs


def cmd_optimize(cfg: ExperimentConfig, group: GroupPresentation, out: Path) -> dict[str, Any]:
    _need(cfg, "graph")
    cg = _prepare_graph(cfg, group)
    runs = _optimize(cg, cfg)
    return {
        "initial": graph_entry(cg),
        "runs": _write_runs(out, runs, "trace"),
        "termination_reason": runs[-1].termination_reason,
        "final_length": runs[-1].length,
    }


def cmd_contract(cfg: ExperimentConfig, group: GroupPresentation, out: Path) -> dict[str, Any]:
    _need(cfg, "graph")
    spec = cfg.contract or ContractSpec()
    cg = _prepare_graph(cfg, group)
    doc: dict[str, Any] = {}
    if spec.optimize_source:
        runs = _optimize(cg, cfg)
        doc["source_runs"] = _write_runs(out, runs, "source_trace")
        source = runs[-1].final_graph
    else:
        source = cg
    if spec.target_positions is not None:
        target = source.with_positions([Point3(*p) for p in spec.target_positions])
    else:
        target = shorten.perturb(source, spec.radius, SplitMix64(cfg.seed).spawn(1))
    c = shorten.midpoint_contraction(shorten.HomotopyPair(source, target))
    straight = carrier.edge_lengths(c.graph)
    source_total = math.fsum(c.source_lengths)
    doc.update(
        source=graph_entry(source),
        target=graph_entry(target),
        midpoint=graph_entry(c.graph),
        edges=[
            {
                "edge": i,
                "source_length": c.source_lengths[i],
                "target_length": c.target_lengths[i],
                "bound": c.bounds[i],
                "broken_length": c.broken_lengths[i],
                "straightened_length": straight[i],
                "slack": c.bounds[i] - c.broken_lengths[i],
            }
            for i in range(len(straight))
        ],
        source_total=source_total,
        target_total=math.fsum(c.target_lengths),
        bound_total=c.bound_total,
        broken_total=c.broken_total,
        straightened_total=math.fsum(straight),
        strict_decrease=c.broken_total < source_total - STRICT_DECREASE,
    )
    return doc


def _entry_document(e: shorten.EnumerationEntry, names, trace_names) -> dict[str, Any]:
    w1, w2 = e.candidate.loop_words
    rep = e.report
    return {
        "index": e.index,
        "kind": e.candidate.kind,
        "loop_words": [w1.to_signed(), w2.to_signed()],
        "loop_words_text": [w1.format(names), w2.format(names)],
        "surjectivity": e.surjectivity,
        "duplicates": list(e.duplicates),
        "collapses": e.collapses,
        "final_combinatorics": {
            "vertices": rep.final_graph.combinatorics.vertex_count,
            "edges": [list(x) for x in rep.final_graph.edges],
        },
        "termination_reason": rep.termination_reason,
        "event": rep.event,
        "length": rep.length,
        "angle_deviation": rep.certificate.angle_deviation,
        "runs": [run_document(r, t) for r, t in zip(e.runs, trace_names)],
    }


def enumeration_table(entries: Sequence[dict[str, Any]]) -> str:
    lines = [
        "| rank | candidate | kind | loop words | final graph | termination | length | angle dev. | surjectivity | merged |",
        "|---:|---:|---|---|---|---|---:|---:|---|---:|",
    ]
    for r, e in enumerate(entries, 1):
        comb = e["final_combinatorics"]
        shape = "theta" if comb["vertices"] == 2 and all(s != d for s, d in comb["edges"]) else (
            "eyeglasses" if comb["vertices"] == 2 else "rose" if comb["vertices"] == 1 else f"{comb['vertices']}v")
        lines.append(
            f"| {r} | {e['index']} | {e['kind']} | {', '.join(e['loop_words_text'])} | {shape} "
            f"| {e['termination_reason']} | {e['length']:.9f} | {e['angle_deviation']:.2e} "
            f"| {e['surjectivity']} | {len(e['duplicates'])} |"
        )
    return "\n".join(lines) + "\n"


def cmd_enumerate2(cfg: ExperimentConfig, group: GroupPresentation, out: Path) -> dict[str, Any]:
    if group.rank != 2:
        raise UsageError(f"enumerate2 needs a rank-2 group, config gives rank {group.rank}")
    candidates = shorten.rank2_candidates(cfg.params.max_word_len)
    entries = shorten.run_candidates(
        group, candidates, cfg.optimizer_config(), cfg.params.search_radius
    )
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    docs = []
    for e in entries:
        names = []
        for k, rep in enumerate(e.runs):
            name = f"traces/candidate_{e.index:04d}_{k}.csv"
            write_trace(out / name, rep)
            names.append(name)
        docs.append(_entry_document(e, group.names, names))
    (out / "table.md").write_text(enumeration_table(docs))
    merged = sum(len(e.duplicates) for e in entries)
    return {
        "entries": docs,
        "dedup": {
            "candidates": len(candidates),
            "optimized": len(entries) + merged,
            "distinct": len(entries),
            "merged_duplicates": merged,
            "skipped": len(candidates) - len(entries) - merged,
            "by_termination": dict(sorted(Counter(e.report.termination_reason for e in entries).items())),
            "by_surjectivity": dict(sorted(Counter(e.surjectivity for e in entries).items())),
        },
    }


def cmd_orbit(cfg: ExperimentConfig, group: GroupPresentation, out: Path) -> dict[str, Any]:
    _need(cfg, "graph", "normalizer")
    n = cfg.normalizer.build(group)
    cg = _prepare_graph(cfg, group)
    doc: dict[str, Any] = {}
    if cfg.params.optimize_first:
        runs = _optimize(cg, cfg)
        doc["base_runs"] = _write_runs(out, runs, "trace")
        cg = runs[-1].final_graph
    members = symmetry.orbit(n, cg, cfg.params.max_power, cfg.params.search_radius)
    image = symmetry.act_on_graph(n, cg)
    lengths = [carrier.total_length(m) for m in members]
    doc.update(
        normalizer={"matrix": matrix_to_doc(n.matrix), "table": [w.to_signed() for w in n.table]},
        orbit_size=len(members),
        image_length=carrier.total_length(image),
        image_equivalent_to_base=carrier.essentially_equivalent(cg, image, cfg.params.search_radius),
        length_spread=max(lengths) - min(lengths),
        members=[dict(power=k, **graph_entry(m)) for k, m in enumerate(members)],
    )
    return doc


def cmd_verify(cfg: ExperimentConfig, group: GroupPresentation, out: Path) -> dict[str, Any]:
    results = []
    for name, checks, seconds in suites.run_all(cfg.seed):
        log.info("suite %s: %.2f s", name, seconds)
        for c in checks:
            print(c.line())
        results.append({"suite": name, "checks": [c.to_dict() for c in checks]})
    return {
        "suites": results,
        "sizes": dict(suites.DEFAULT_SIZES),
        "passed": all(c["passed"] for r in results for c in r["checks"]),
    }


HANDLERS = {
    "optimize": cmd_optimize,
    "contract": cmd_contract,
    "enumerate2": cmd_enumerate2,
    "orbit": cmd_orbit,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# entry point

def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    doc = cfg.to_document()
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.max_iter is not None:
        doc.setdefault("optimizer", {})["max_iterations"] = args.max_iter
    if args.word_len is not None:
        doc.setdefault("params", {})["max_word_len"] = args.word_len
    return ExperimentConfig.model_validate(doc)


def _describe_validation(exc: ValidationError) -> str:
    lines = [f"config: {exc.error_count()} invalid field(s)"]
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def load(args) -> tuple[ExperimentConfig, GroupPresentation]:
    if args.config is None:
        if args.command != "verify":
            raise UsageError(f"{args.command} needs --config")
        cfg = ExperimentConfig()
    else:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        except ValidationError as exc:
            raise UsageError(_describe_validation(exc)) from exc
    try:
        cfg = _apply_overrides(cfg, args)
    except ValidationError as exc:
        raise UsageError(_describe_validation(exc)) from exc
    try:
        group = cfg.group.build()
        # fail on malformed graphs or normalizers before any work starts
        if cfg.graph is not None:
            cfg.graph.build(group, cfg.seed, cfg.optimizer.jitter)
        if cfg.normalizer is not None:
            cfg.normalizer.build(group)
    except (GeometryError, WordError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from exc
    return cfg, group


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"carrierforge: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg, group = load(args)
        args.out.mkdir(parents=True, exist_ok=True)
    except UsageError as exc:
        print(f"carrierforge: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"carrierforge: error: cannot create output directory: {exc}", file=sys.stderr)
        return 1

    start = time.perf_counter()
    try:
        body = HANDLERS[args.command](cfg, group, args.out)
        report = {
            "command": args.command,
            "prng": "splitmix64",
            "config": cfg.to_document(),
            "group": group_document(group),
            **body,
        }
        write_json(args.out / "report.json", report)
    except UsageError as exc:
        print(f"carrierforge: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # an invariant broke mid-run
        log.exception("internal error")
        print(f"carrierforge: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - start)
    if args.command == "verify" and not body["passed"]:
        print("carrierforge: property suite failure", file=sys.stderr)
        return 2
    print(f"carrierforge {args.command}: wrote {args.out / 'report.json'}")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
