"""Command-line interface.

Exit codes: 0 success, 2 when analysis finished but produced diagnostics
(skipped statements, unresolved names), 1 on hard errors.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import SCHEMA_VERSIONS, __version__
from .dataflow import TaintQuery, run_query
from .declarations import DeclarationRegistry, DeclFormat, load_declarations, validate
from .errors import TypeflowError
from .evaluation import ScoreMode, evaluate_corpus
from .graph import Graph, build_graph
from .inference import infer
from .parser import parse
from .pipeline import PipelineConfig, build_registry, make_backend, run_pipeline
from .propagation import DEFAULT_ITERATIONS, propagate
from .slicing import extract_slices, group_program_slices, slices_from_json, slices_to_json
from .typenames import load_top100

DIAG_EXIT = 2


def _default_budget() -> int:
    return int(os.environ.get("TYPEFLOW_TOKEN_BUDGET", "512"))


def _resolve_backend_name(backend: str) -> str:
    if backend == "heuristic":
        return backend
    if backend == "remote":
        url = os.environ.get("TYPEFLOW_BACKEND_URL")
        if not url:
            raise click.UsageError(
                "--backend remote needs a URL argument or TYPEFLOW_BACKEND_URL"
            )
        return url
    return backend  # explicit URL


def _write_or_print(payload, out: str | None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


def _print_version(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(f"typeflow {__version__}")
    for name, version in sorted(SCHEMA_VERSIONS.items()):
        click.echo(f"schema {name}: {version}")
    ctx.exit()


@click.group()
@click.option(
    "--version", is_flag=True, callback=_print_version, expose_value=False,
    is_eager=True, help="Print package and schema versions.",
)
@click.option("-v", "--verbose", is_flag=True, help="Log pipeline stages.")
def main(verbose: bool):
    """Usage slicing, type recovery, and taint queries for ECMAScript-style code."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
        force=True,
    )


@main.command("parse")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--dump-ast", is_flag=True, help="Emit the AST as JSON.")
@click.option("--out", type=click.Path(), default=None)
def parse_cmd(files, dump_ast, out):
    """Parse files, reporting recovery diagnostics."""
    had_diagnostics = False
    dumps = []
    for path in files:
        source = Path(path).read_text(encoding="utf-8")
        result = parse(source, Path(path).name)
        for d in result.diagnostics:
            had_diagnostics = True
            click.echo(f"{path}: {d.message} (line {d.span.start_line})", err=True)
        if dump_ast:
            dumps.append({"file": Path(path).name, "ast": result.program.to_json()})
    if dump_ast:
        _write_or_print(dumps[0] if len(dumps) == 1 else dumps, out)
    sys.exit(DIAG_EXIT if had_diagnostics else 0)


@main.command("graph")
@click.argument("file", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def graph_cmd(file, out):
    """Build the code property graph for one file."""
    source = Path(file).read_text(encoding="utf-8")
    result = parse(source, Path(file).name)
    g = build_graph(result.program, Path(file).name, source)
    _write_or_print(g.to_json(), out)
    sys.exit(DIAG_EXIT if (result.diagnostics or g.diagnostics) else 0)


@main.command("propagate")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--iterations", type=int, default=DEFAULT_ITERATIONS, show_default=True)
@click.option("--dump-typemap", is_flag=True, help="Emit the symbol type map.")
@click.option("--out", type=click.Path(), default=None)
def propagate_cmd(files, iterations, dump_typemap, out):
    """Run the flow-insensitive propagation pass."""
    maps = []
    for path in files:
        source = Path(path).read_text(encoding="utf-8")
        result = parse(source, Path(path).name)
        g = build_graph(result.program, Path(path).name, source)
        typed, tmap = propagate(g, iterations)
        entry = {"file": Path(path).name, "graph": typed.to_json()}
        if dump_typemap:
            entry["typeMap"] = tmap.to_json()
        maps.append(entry)
    _write_or_print(maps[0] if len(maps) == 1 else maps, out)


@main.command("slice")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.option("--iterations", type=int, default=DEFAULT_ITERATIONS, show_default=True)
@click.option("--no-propagate", is_flag=True, help="Slice the untyped graph.")
def slice_cmd(files, out, iterations, no_propagate):
    """Extract usage slices grouped by scope."""
    payloads = []
    for path in files:
        source = Path(path).read_text(encoding="utf-8")
        result = parse(source, Path(path).name)
        g = build_graph(result.program, Path(path).name, source)
        if not no_propagate:
            g, _ = propagate(g, iterations)
        slices = extract_slices(g)
        groups = group_program_slices(g, slices)
        payloads.append(slices_to_json(g, groups))
    _write_or_print(payloads[0] if len(payloads) == 1 else payloads, out)


def _load_slice_files(path: str):
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = obj if isinstance(obj, list) else [obj]
    return [slices_from_json(e) for e in entries]


@main.command("infer")
@click.option("--backend", default="heuristic", show_default=True,
              help="'heuristic', 'remote' (with TYPEFLOW_BACKEND_URL), or a URL.")
@click.option("--slices", "slices_path", required=True, type=click.Path(exists=True))
@click.option("--lexicon", type=click.Path(exists=True), default=None)
@click.option("--decls", multiple=True, type=click.Path(exists=True))
@click.option("--decl-format", default=DeclFormat.DTS_SUBSET.value,
              type=click.Choice([f.value for f in DeclFormat]))
@click.option("--no-validate", is_flag=True)
@click.option("--validation-policy", default="accept-unknown",
              type=click.Choice(["strict", "accept-unknown", "off"]))
@click.option("--budget", type=int, default=None, help="Input token budget.")
@click.option("--include-typed", is_flag=True, help="Also query already-typed slices.")
@click.option("--out", type=click.Path(), default=None)
def infer_cmd(backend, slices_path, lexicon, decls, decl_format, no_validate,
              validation_policy, budget, include_typed, out):
    """Query a backend for type predictions over sliced scopes."""
    config = PipelineConfig(
        inputs=[],
        backend=_resolve_backend_name(backend),
        lexicon_path=lexicon,
        declaration_paths=list(decls),
        declaration_format=decl_format,
        validation_policy="off" if no_validate else validation_policy,
        token_budget=budget or _default_budget(),
    )
    handle = make_backend(config)
    registry = build_registry(config)
    predictions = []
    for _, groups in _load_slice_files(slices_path):
        predictions.extend(
            infer(
                groups,
                handle,
                registry=registry,
                validation_policy=config.validation_policy,
                skip_typed=not include_typed,
            )
        )
    _write_or_print([p.to_json() for p in predictions], out)


@main.command("validate")
@click.option("--decls", multiple=True, required=True, type=click.Path(exists=True))
@click.option("--decl-format", default=DeclFormat.DTS_SUBSET.value,
              type=click.Choice([f.value for f in DeclFormat]))
@click.option("--slices", "slices_path", required=True, type=click.Path(exists=True))
@click.option("--suggestions", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
def validate_cmd(decls, decl_format, slices_path, suggestions, out):
    """Check suggested types against declaration constraints."""
    registry = DeclarationRegistry()
    for path in decls:
        fmt = DeclFormat.JSON_STUB if path.endswith(".json") else DeclFormat(decl_format)
        for decl in load_declarations(Path(path).read_text(encoding="utf-8"), fmt):
            registry.add(decl)
    slice_index = {}
    for _, groups in _load_slice_files(slices_path):
        for group in groups:
            for s in group.slices:
                slice_index[(group.scope, s.target.symbol)] = s
    preds = json.loads(Path(suggestions).read_text(encoding="utf-8"))
    verdicts = []
    for p in preds:
        s = slice_index.get((p["scope"], p["symbol"]))
        if s is None:
            verdicts.append({**p, "verdict": {"status": "NoSlice", "details": []}})
            continue
        v = validate(s, p["type"], registry)
        verdicts.append({**p, "verdict": v.to_json()})
    _write_or_print(verdicts, out)


@main.command("query")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--source-types", required=True, help="Comma-separated type names.")
@click.option("--source-member", default=None)
@click.option("--sink", required=True, help="Callee name or glob, e.g. '*.query'.")
@click.option("--sink-arg", "sink_args", multiple=True, type=int)
@click.option("--out", type=click.Path(), default=None)
def query_cmd(graph_path, source_types, source_member, sink, sink_args, out):
    """Run a source-to-sink taint query over a serialized graph."""
    g = Graph.from_json(json.loads(Path(graph_path).read_text(encoding="utf-8")))
    q = TaintQuery(
        source_types=frozenset(t.strip() for t in source_types.split(",") if t.strip()),
        sink_callee=sink,
        source_member=source_member,
        sink_arg_positions=frozenset(sink_args) if sink_args else None,
    )
    flows = run_query(g, q)
    _write_or_print([f.to_json(g) for f in flows], out)


@main.command("eval")
@click.option("--corpus", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--backend", default="heuristic", show_default=True)
@click.option("--lexicon", type=click.Path(exists=True), default=None)
@click.option("--mode", default="greedy", type=click.Choice(["greedy", "exact"]))
@click.option("--top100", "top100_path", type=click.Path(exists=True), default=None)
@click.option("--report", "report_path", type=click.Path(), default=None)
def eval_cmd(corpus, backend, lexicon, mode, top100_path, report_path):
    """Mask a labelled corpus and score a backend against it."""
    config = PipelineConfig(
        inputs=[], backend=_resolve_backend_name(backend), lexicon_path=lexicon
    )
    handle = make_backend(config)
    top100 = load_top100(top100_path) if top100_path else None
    report = evaluate_corpus(corpus, handle, ScoreMode(mode), top100)
    _write_or_print(report.to_json(), report_path)


@main.command("pipeline")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--backend", default="heuristic", show_default=True)
@click.option("--lexicon", type=click.Path(exists=True), default=None)
@click.option("--decls", multiple=True, type=click.Path(exists=True))
@click.option("--decl-format", default=DeclFormat.DTS_SUBSET.value,
              type=click.Choice([f.value for f in DeclFormat]))
@click.option("--validation-policy", default="accept-unknown",
              type=click.Choice(["strict", "accept-unknown", "off"]))
@click.option("--iterations", type=int, default=DEFAULT_ITERATIONS, show_default=True)
@click.option("--budget", type=int, default=None)
@click.option("--out-dir", default="out", show_default=True)
@click.option("--from-stage", default="parse",
              type=click.Choice(["parse", "infer", "query"]))
@click.option("--source-types", default=None)
@click.option("--source-member", default=None)
@click.option("--sink", default=None)
@click.option("--sink-arg", "sink_args", multiple=True, type=int)
def pipeline_cmd(files, backend, lexicon, decls, decl_format, validation_policy,
                 iterations, budget, out_dir, from_stage, source_types,
                 source_member, sink, sink_args):
    """Run the full pipeline, writing every intermediate artifact."""
    config = PipelineConfig(
        inputs=list(files),
        backend=_resolve_backend_name(backend),
        lexicon_path=lexicon,
        iterations=iterations,
        declaration_paths=list(decls),
        declaration_format=decl_format,
        validation_policy=validation_policy,
        token_budget=budget or _default_budget(),
        out_dir=out_dir,
        from_stage=from_stage,
        source_types=[t.strip() for t in source_types.split(",")] if source_types else [],
        source_member=source_member,
        sink=sink,
        sink_args=list(sink_args),
    )
    status, artifacts = run_pipeline(config)
    for name, path in sorted(artifacts.items()):
        click.echo(f"{name}: {path}", err=True)
    sys.exit(status)


def run():  # pragma: no cover
    try:
        main()
    except TypeflowError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    run()
