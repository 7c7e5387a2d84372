"""End-to-end pipeline: parse -> graph -> propagate -> slice -> infer ->
validate -> re-propagate -> coverage/query artifacts.

Every stage reads and writes the JSON formats its module defines, so any
stage's output is enough to resume at the next one.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .dataflow import TaintQuery, aggregate_coverage, run_query, typed_coverage_report
from .declarations import DeclarationRegistry, DeclFormat, load_declarations
from .graph import Graph, build_graph
from .inference import (
    BackendContract,
    HeuristicBackend,
    InferencePrediction,
    Lexicon,
    RemoteBackend,
    infer,
)
from .parser import parse
from .propagation import DEFAULT_ITERATIONS, propagate, repropagate_with_inferences
from .slicing import extract_slices, group_program_slices, slices_to_json
from .typenames import DEFAULT_DROP_SET

log = logging.getLogger("typeflow.pipeline")

STAGES = ("parse", "graph", "propagate", "slice", "infer", "repropagate", "query", "report")


@dataclass
class PipelineConfig:
    inputs: list[str]
    backend: str = "heuristic"  # "heuristic" or a URL
    lexicon_path: str | None = None
    iterations: int = DEFAULT_ITERATIONS
    declaration_paths: list[str] = field(default_factory=list)
    declaration_format: str = DeclFormat.DTS_SUBSET.value
    validation_policy: str = "accept-unknown"  # strict | accept-unknown | off
    drop_set: frozenset[str] = DEFAULT_DROP_SET
    token_budget: int = 512
    out_dir: str = "out"
    from_stage: str = "parse"
    source_types: list[str] = field(default_factory=list)
    source_member: str | None = None
    sink: str | None = None
    sink_args: list[int] = field(default_factory=list)

    def __post_init__(self):
        if self.token_budget < 16:
            raise ValueError("token budget must be >= 16")
        if self.validation_policy == "off":
            return
        # validation on without declarations silently degrades to unknown-type
        # handling; that is allowed.


def make_backend(config: PipelineConfig):
    if config.backend == "heuristic":
        lexicon = Lexicon.load(config.lexicon_path)
        return HeuristicBackend(
            lexicon, BackendContract(input_budget=config.token_budget)
        )
    return RemoteBackend(config.backend)


def build_registry(config: PipelineConfig) -> DeclarationRegistry | None:
    if config.validation_policy == "off":
        return None
    if not config.declaration_paths:
        return None
    registry = DeclarationRegistry()
    for path in config.declaration_paths:
        text = Path(path).read_text(encoding="utf-8")
        fmt = (
            DeclFormat.JSON_STUB
            if path.endswith(".json")
            else DeclFormat(config.declaration_format)
        )
        for decl in load_declarations(text, fmt):
            registry.add(decl)
    return registry


def run_pipeline(config: PipelineConfig) -> tuple[int, dict]:
    """Run all stages; returns (exit status, artifact paths)."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: dict[str, str] = {}
    had_diagnostics = False

    if config.from_stage not in ("parse", "infer", "query"):
        raise ValueError(f"unsupported --from-stage {config.from_stage!r}")

    graphs: dict[str, Graph] = {}
    all_groups = []
    typed_graphs: dict[str, Graph] = {}

    if config.from_stage == "parse":
        for path in config.inputs:
            source = Path(path).read_text(encoding="utf-8")
            file_id = Path(path).name
            log.info("stage parse: %s", file_id)
            result = parse(source, file_id)
            if result.diagnostics:
                had_diagnostics = True
                for d in result.diagnostics:
                    log.warning("%s: %s", file_id, d.message)
            log.info("stage graph: %s", file_id)
            graph = build_graph(result.program, file_id, source)
            if graph.diagnostics:
                had_diagnostics = True
            log.info("stage propagate: %s (%d iterations)", file_id, config.iterations)
            typed, _ = propagate(graph, config.iterations)
            graphs[file_id] = typed
            stem = Path(path).stem
            gpath = out_dir / f"{stem}.graph.json"
            gpath.write_text(typed.to_json_text(), encoding="utf-8")
            artifacts[f"graph:{file_id}"] = str(gpath)
            log.info("stage slice: %s", file_id)
            slices = extract_slices(typed)
            groups = group_program_slices(typed, slices)
            all_groups.append(groups)
            spath = out_dir / f"{stem}.slices.json"
            spath.write_text(
                json.dumps(slices_to_json(typed, groups), indent=2, sort_keys=True),
                encoding="utf-8",
            )
            artifacts[f"slices:{file_id}"] = str(spath)
    elif config.from_stage == "infer":
        from .slicing import slices_from_json

        for path in config.inputs:
            stem = Path(path).stem
            file_id = Path(path).name
            log.info("resume at infer: loading %s artifacts", stem)
            gobj = json.loads((out_dir / f"{stem}.graph.json").read_text())
            graphs[file_id] = Graph.from_json(gobj)
            sobj = json.loads((out_dir / f"{stem}.slices.json").read_text())
            _, groups = slices_from_json(sobj)
            all_groups.append(groups)

    if config.from_stage in ("parse", "infer"):
        log.info("stage infer: backend=%s", config.backend)
        backend = make_backend(config)
        registry = build_registry(config)
        predictions: list[InferencePrediction] = []
        for groups in all_groups:
            predictions.extend(
                infer(
                    groups,
                    backend,
                    registry=registry,
                    validation_policy=config.validation_policy,
                    drop_set=config.drop_set,
                )
            )
        ppath = out_dir / "preds.json"
        ppath.write_text(
            json.dumps([p.to_json() for p in predictions], indent=2, sort_keys=True),
            encoding="utf-8",
        )
        artifacts["predictions"] = str(ppath)

        log.info("stage repropagate: %d accepted predictions", len(predictions))
        coverage_reports = []
        for file_id, graph in graphs.items():
            scoped = [p for p in predictions if p.scope.startswith(file_id + ":")]
            enriched = repropagate_with_inferences(graph, scoped)
            typed_graphs[file_id] = enriched
            coverage_reports.append(typed_coverage_report(graph, enriched))
            stem = Path(file_id).stem
            tpath = out_dir / f"{stem}.typed_graph.json"
            tpath.write_text(enriched.to_json_text(), encoding="utf-8")
            artifacts[f"typed_graph:{file_id}"] = str(tpath)

        log.info("stage report: coverage for %d files", len(coverage_reports))
        cpath = out_dir / "coverage.json"
        cpath.write_text(
            json.dumps(aggregate_coverage(coverage_reports), indent=2, sort_keys=True),
            encoding="utf-8",
        )
        artifacts["coverage"] = str(cpath)
    else:  # resume at query
        for path in config.inputs:
            stem = Path(path).stem
            file_id = Path(path).name
            log.info("resume at query: loading %s typed graph", stem)
            gobj = json.loads((out_dir / f"{stem}.typed_graph.json").read_text())
            typed_graphs[file_id] = Graph.from_json(gobj)

    if config.sink and config.source_types:
        log.info("stage query: sink=%s", config.sink)
        query = TaintQuery(
            source_types=frozenset(config.source_types),
            sink_callee=config.sink,
            source_member=config.source_member,
            sink_arg_positions=(
                frozenset(config.sink_args) if config.sink_args else None
            ),
        )
        flow_report = []
        for file_id, graph in sorted(typed_graphs.items()):
            for flow in run_query(graph, query):
                flow_report.append({"file": file_id, **flow.to_json(graph)})
        fpath = out_dir / "flows.json"
        fpath.write_text(
            json.dumps(flow_report, indent=2, sort_keys=True), encoding="utf-8"
        )
        artifacts["flows"] = str(fpath)

    return (2 if had_diagnostics else 0), artifacts
