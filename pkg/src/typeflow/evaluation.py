"""Evaluation harness: annotation masking, obfuscation, and scoring.

Ground truth comes from the corpus's own annotations.  Masking removes
every type annotation and rewrites ``new C(...)`` constructee names to
opaque ``__OBFn`` placeholders so a backend cannot read types off the
source.  Entries annotated ``Function`` or ``void`` are dropped, as are
variables whose only appearance is their defining assignment.  Scoring is
Top-1 with exact string matching; a secondary base-name match (generic
arguments stripped) is reported separately and never folded into the
headline number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .ast_nodes import AstNode, NodeKind
from .graph import build_graph
from .inference import InferencePrediction, infer, select_greedy
from .parser import parse
from .slicing import extract_slices, group_program_slices
from .spans import LineIndex, SourceSpan
from .typenames import load_top100

OBF_PREFIX = "__OBF"
_DROPPED_TRUTH_TYPES = frozenset({"Function", "void", "any"})


class TruthCategory(str, Enum):
    TOP100_BUILTIN = "Top100Builtin"
    USER_DEFINED = "UserDefined"
    OTHER = "Other"


@dataclass(frozen=True)
class GroundTruthEntry:
    file: str
    scope: str
    symbol: str
    span: SourceSpan
    true_type: str
    category: TruthCategory

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "scope": self.scope,
            "symbol": self.symbol,
            "span": self.span.to_json(),
            "trueType": self.true_type,
            "category": self.category.value,
        }


@dataclass
class MetricsReport:
    top1_overall: float
    top1_top100: float
    top1_user_defined: float
    top1_other: float
    counts: dict
    verdicts: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "top1Overall": self.top1_overall,
            "top1Top100": self.top1_top100,
            "top1UserDefined": self.top1_user_defined,
            "top1Other": self.top1_other,
            "counts": self.counts,
            "verdicts": self.verdicts,
        }


# ---------------------------------------------------------------------------
# masking
# ---------------------------------------------------------------------------


def mask_annotations(
    source: str,
    file_id: str = "<mem>",
    top100: list[str] | None = None,
) -> tuple[str, list[GroundTruthEntry]]:
    """Strip annotations and obfuscate instantiations, recording the truth."""
    result = parse(source, file_id)
    program = result.program
    graph = build_graph(program, file_id, source)
    slices = extract_slices(graph)
    used = {(s.scope, s.target.symbol) for s in slices}
    top_set = set(top100 if top100 is not None else load_top100())
    user_defined = _user_defined_names(program)
    scope_of = _ScopeNames(graph)

    edits: list[tuple[int, int, bytes]] = []
    raw_entries: list[tuple[str, str, SourceSpan, str]] = []  # scope, symbol, span, type
    _collect(program, scope_of, raw_entries, edits)

    masked, remap = _apply_edits(source, edits)
    index = LineIndex(masked)

    entries: list[GroundTruthEntry] = []
    seen: set[tuple[str, str, int]] = set()
    for scope, symbol, span, true_type in raw_entries:
        if true_type in _DROPPED_TRUTH_TYPES:
            continue
        if (scope, symbol) not in used:
            continue
        new_start = remap(span.start_offset)
        new_end = remap(span.end_offset)
        key = (scope, symbol, new_start)
        if key in seen:
            continue
        seen.add(key)
        entries.append(
            GroundTruthEntry(
                file=file_id,
                scope=scope,
                symbol=symbol,
                span=index.make_span(file_id, new_start, new_end),
                true_type=true_type,
                category=_categorize(true_type, top_set, user_defined),
            )
        )
    entries.sort(key=lambda e: e.span.sort_key())
    return masked, entries


def _collect(program: AstNode, scope_of, raw_entries, edits):
    obf_counter = 0

    def walk(node: AstNode):
        nonlocal obf_counter
        if node.kind is NodeKind.TYPE_ANNOTATION:
            edits.append((node.span.start_offset, node.span.end_offset, b""))
            return  # nothing below an annotation
        if node.kind in (NodeKind.VAR_DECL, NodeKind.PARAM) and node.annotation:
            scope = scope_of.for_offset(node.span.start_offset)
            span = node.name_span or node.span
            raw_entries.append((scope, node.name or "", span, node.annotation))
        if node.kind is NodeKind.NEW:
            constructee = node.children[0]
            placeholder = f"{OBF_PREFIX}{obf_counter}".encode("utf-8")
            obf_counter += 1
            edits.append(
                (constructee.span.start_offset, constructee.span.end_offset, placeholder)
            )
        if node.kind is NodeKind.VAR_DECL and node.name:
            init = next(
                (c for c in node.children if c.kind is not NodeKind.TYPE_ANNOTATION),
                None,
            )
            if init is not None and init.kind is NodeKind.NEW and init.name:
                scope = scope_of.for_offset(node.span.start_offset)
                raw_entries.append(
                    (scope, node.name, node.name_span or node.span, init.name)
                )
        for child in node.children:
            walk(child)

    walk(program)


class _ScopeNames:
    """Innermost method full_name for a source offset."""

    def __init__(self, graph):
        self._methods = [
            (m.span.start_offset, m.span.end_offset, m.full_name or "")
            for m in graph.methods()
        ]

    def for_offset(self, offset: int) -> str:
        best = None
        for start, end, name in self._methods:
            if start <= offset < max(end, start + 1):
                if best is None or (end - start) < (best[1] - best[0]):
                    best = (start, end, name)
        return best[2] if best else ""


def _user_defined_names(program: AstNode) -> set[str]:
    """Constructor-function pattern: same-file function names are the
    closest thing to locally defined classes in the subset."""
    names: set[str] = set()
    for node in program.walk():
        if node.kind in (NodeKind.FUNCTION_DECL, NodeKind.ARROW_FUNCTION) and node.name:
            names.add(node.name)
    return names


def _categorize(
    true_type: str, top_set: set[str], user_defined: set[str]
) -> TruthCategory:
    base = _base_name(true_type)
    if base in user_defined:
        return TruthCategory.USER_DEFINED
    if true_type in top_set or base in top_set:
        return TruthCategory.TOP100_BUILTIN
    return TruthCategory.OTHER


def _apply_edits(source: str, edits: list[tuple[int, int, bytes]]):
    data = source.encode("utf-8")
    edits = sorted(set(edits))
    parts: list[bytes] = []
    prev = 0
    breakpoints: list[tuple[int, int]] = []  # (old offset, cumulative delta)
    delta = 0
    for start, end, replacement in edits:
        parts.append(data[prev:start])
        parts.append(replacement)
        delta += len(replacement) - (end - start)
        breakpoints.append((end, delta))
        prev = end
    parts.append(data[prev:])
    masked = b"".join(parts).decode("utf-8")

    def remap(offset: int) -> int:
        shift = 0
        for at, d in breakpoints:
            if offset >= at:
                shift = d
            else:
                break
        return offset + shift

    return masked, remap


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


class ScoreMode(str, Enum):
    GREEDY = "greedy"
    EXACT_LOCATION = "exact"


def _base_name(type_name: str) -> str:
    return re.sub(r"<.*>\s*$", "", type_name.strip()).strip()


def score(
    predictions: list[InferencePrediction],
    truth: list[GroundTruthEntry],
    mode: ScoreMode | str = ScoreMode.GREEDY,
) -> MetricsReport:
    """Top-1 accuracy per category; UNK counts as incorrect."""
    mode = ScoreMode(mode)
    if mode is ScoreMode.GREEDY:
        chosen = select_greedy(predictions)
        by_key = {(p.scope, p.symbol): p for p in chosen}

        def lookup(entry: GroundTruthEntry):
            return by_key.get((entry.scope, entry.symbol))

    else:
        by_loc = {}
        for p in predictions:
            if p.span is None:
                continue
            key = (p.scope, p.symbol, p.span.start_offset)
            cur = by_loc.get(key)
            if cur is None or p.confidence > cur.confidence:
                by_loc[key] = p

        def lookup(entry: GroundTruthEntry):
            return by_loc.get((entry.scope, entry.symbol, entry.span.start_offset))

    per_cat_evaluated = {c: 0 for c in TruthCategory}
    per_cat_correct = {c: 0 for c in TruthCategory}
    base_matches = 0
    verdicts: list[dict] = []
    for entry in sorted(truth, key=lambda e: (e.file, e.scope, e.symbol, e.span.sort_key())):
        if entry.true_type == "any":
            continue  # ambiguous labels are excluded outright
        prediction = lookup(entry)
        predicted = prediction.type_name if prediction else None
        correct = (
            predicted is not None
            and predicted != "UNK"
            and predicted.strip() == entry.true_type.strip()
        )
        base_match = (
            predicted is not None
            and predicted != "UNK"
            and _base_name(predicted) == _base_name(entry.true_type)
        )
        per_cat_evaluated[entry.category] += 1
        if correct:
            per_cat_correct[entry.category] += 1
        if base_match:
            base_matches += 1
        verdicts.append(
            {
                "file": entry.file,
                "scope": entry.scope,
                "symbol": entry.symbol,
                "trueType": entry.true_type,
                "predicted": predicted,
                "correct": correct,
                "baseNameMatch": base_match,
                "category": entry.category.value,
            }
        )

    def ratio(cat: TruthCategory) -> float:
        n = per_cat_evaluated[cat]
        return per_cat_correct[cat] / n if n else 0.0

    evaluated = sum(per_cat_evaluated.values())
    correct_total = sum(per_cat_correct.values())
    return MetricsReport(
        top1_overall=correct_total / evaluated if evaluated else 0.0,
        top1_top100=ratio(TruthCategory.TOP100_BUILTIN),
        top1_user_defined=ratio(TruthCategory.USER_DEFINED),
        top1_other=ratio(TruthCategory.OTHER),
        counts={
            "evaluated": evaluated,
            "correct": correct_total,
            "baseNameMatches": base_matches,
            "byCategory": {
                c.value: {
                    "evaluated": per_cat_evaluated[c],
                    "correct": per_cat_correct[c],
                }
                for c in TruthCategory
            },
        },
        verdicts=verdicts,
    )


# ---------------------------------------------------------------------------
# corpus runner
# ---------------------------------------------------------------------------


def evaluate_corpus(
    corpus_dir: str | Path,
    backend,
    mode: ScoreMode | str = ScoreMode.GREEDY,
    top100: list[str] | None = None,
) -> MetricsReport:
    """Mask every corpus file, infer on the masked sources, and score.

    The harness deliberately skips type propagation and all prediction
    filtering so that unhelpful answers (``UNK`` and friends) reach the
    scorer and count against the backend.
    """
    corpus = Path(corpus_dir)
    truths: list[GroundTruthEntry] = []
    predictions: list[InferencePrediction] = []
    for path in sorted(corpus.glob("*.[jt]s")):
        source = path.read_text(encoding="utf-8")
        masked, entries = mask_annotations(source, path.name, top100)
        truths.extend(entries)
        result = parse(masked, path.name)
        graph = build_graph(result.program, path.name, masked)
        slices = extract_slices(graph)
        groups = group_program_slices(graph, slices)
        predictions.extend(
            infer(
                groups,
                backend,
                skip_typed=False,
                drop_set=frozenset(),
                dedupe=False,
            )
        )
    return score(predictions, truths, mode)
