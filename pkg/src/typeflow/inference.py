"""Inference client: tagged-snippet rendering, backends, and filtering.

A scope is rendered once per inference request: every slice gets one tag
index, and the marker ``<extra_id_k>`` is inserted immediately before the
slice's declaration and each usage.  Backends answer per tag; generative
output of the form ``"<extra_id_0> Array"`` is parsed greedily (a type is
everything up to the next marker).  Unhelpful predictions (``any``,
``object``, ``UNK``, ``void`` and friends) are dropped before they can
reach re-propagation.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources

import requests

from .declarations import DeclarationRegistry, ValidationStatus, validate
from .errors import BackendUnavailable, LexiconError, MalformedOutput
from .slicing import CallRole, DefKind, ProgramUsageSlice, UsageSlice
from .spans import LineIndex, SourceSpan
from .typenames import ANY, DEFAULT_DROP_SET, LITERAL_MODEL_TYPES, is_unhelpful

TAG_TEMPLATE = "<extra_id_{}>"
TAG_RE = re.compile(r"<extra_id_(\d+)>")
NO_TYPES_SENTINEL = "No types to infer."
DEFAULT_PREFIX = "Infer types for tagged variables:"

WIRE_VERSION = 1
WIRE_LANGUAGE = "ecmascript"


class SentinelNoTypes:
    """Marker result for the exact output "No types to infer."."""

    def __repr__(self):  # pragma: no cover
        return "SentinelNoTypes"


SENTINEL_NO_TYPES = SentinelNoTypes()


@dataclass(frozen=True)
class BackendContract:
    batch_limit: int = 16
    input_budget: int = 512
    output_budget: int = 128
    languages: tuple[str, ...] = (WIRE_LANGUAGE,)

    def __post_init__(self):
        if self.input_budget <= 0 or self.output_budget <= 0 or self.batch_limit <= 0:
            raise ValueError("backend budgets must be positive")


@dataclass
class InferencePrediction:
    scope: str
    tag_index: int
    symbol: str
    type_name: str
    confidence: float = 1.0
    span: SourceSpan | None = None
    validated: bool | None = None

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "tagIndex": self.tag_index,
            "symbol": self.symbol,
            "type": self.type_name,
            "confidence": self.confidence,
            "span": self.span.to_json() if self.span else None,
            "validated": self.validated,
        }

    @staticmethod
    def from_json(obj: dict) -> "InferencePrediction":
        return InferencePrediction(
            scope=obj["scope"],
            tag_index=obj["tagIndex"],
            symbol=obj["symbol"],
            type_name=obj["type"],
            confidence=obj.get("confidence", 1.0),
            span=SourceSpan.from_json(obj["span"]) if obj.get("span") else None,
            validated=obj.get("validated"),
        )


@dataclass
class TagEntry:
    slice: UsageSlice
    spans: list[SourceSpan]  # relative to the rendered source


@dataclass
class TaggedSnippet:
    text: str  # prefix + newline + tagged source
    prefix: str
    scope: str
    source: str  # the kept raw source, without markers
    tag_map: dict[int, TagEntry]
    truncated: bool = False


def approximate_tokens(text: str) -> int:
    """Documented stand-in for the real tokenizer: lexeme count x 1.3.

    Tag markers count as one lexeme each; the serving side re-truncates
    authoritatively with its own tokenizer.
    """
    stripped, markers = TAG_RE.subn(" ", text)
    lexemes = len(re.findall(r"\w+|[^\w\s]", stripped)) + markers
    return math.ceil(lexemes * 1.3)


def render_tagged(
    snapshot: ProgramUsageSlice,
    budget: int = 512,
    prefix: str = DEFAULT_PREFIX,
) -> TaggedSnippet:
    """Insert tag markers at each slice's declaration and usage positions."""
    if budget < 16:
        raise ValueError("token budget must be >= 16")
    base = snapshot.scope_span.start_offset if snapshot.scope_span else 0
    source_bytes = snapshot.source.encode("utf-8")
    limit = len(source_bytes)

    per_slice: list[tuple[int, UsageSlice, list[int]]] = []
    for s in snapshot.slices:
        offsets: set[int] = set()
        for span in [s.target.span] + list(s.usages):
            rel = span.start_offset - base
            if 0 <= rel < limit:
                offsets.add(rel)
        if offsets:
            per_slice.append((min(offsets), s, sorted(offsets)))
    per_slice.sort(key=lambda item: item[0])

    cuts = [off for off in sorted(set(snapshot.statement_offsets)) if 0 < off < limit]
    keep = limit
    truncated = False
    while True:
        text, tag_map = _render_at(source_bytes, keep, per_slice, prefix)
        if approximate_tokens(text) <= budget or not cuts:
            break
        keep = cuts.pop()  # drop the trailing statement
        truncated = True
    return TaggedSnippet(
        text=text,
        prefix=prefix,
        scope=snapshot.scope,
        source=source_bytes[:keep].decode("utf-8"),
        tag_map=tag_map,
        truncated=truncated,
    )


def _render_at(
    source_bytes: bytes,
    keep: int,
    per_slice: list[tuple[int, UsageSlice, list[int]]],
    prefix: str,
) -> tuple[str, dict[int, TagEntry]]:
    kept = source_bytes[:keep]
    insertions: list[tuple[int, int]] = []  # (offset, tag index)
    tag_map: dict[int, TagEntry] = {}
    index = 0
    line_index = LineIndex(kept.decode("utf-8"))
    for _, s, offsets in per_slice:
        surviving = [o for o in offsets if o < keep]
        if not surviving:
            continue
        spans = [
            line_index.make_span("", o, min(o + _span_width(s, o), keep))
            for o in surviving
        ]
        tag_map[index] = TagEntry(slice=s, spans=spans)
        insertions.extend((o, index) for o in surviving)
        index += 1
    insertions.sort()
    parts: list[bytes] = []
    prev = 0
    for offset, tag in insertions:
        parts.append(kept[prev:offset])
        parts.append(TAG_TEMPLATE.format(tag).encode("utf-8"))
        prev = offset
    parts.append(kept[prev:])
    tagged = b"".join(parts).decode("utf-8")
    return f"{prefix}\n{tagged}", tag_map


def _span_width(s: UsageSlice, rel_offset: int) -> int:
    return max(len(s.target.symbol), 1)


def strip_tags(snippet: TaggedSnippet) -> str:
    """Remove markers and the prefix; must reproduce the kept source."""
    body = snippet.text[len(snippet.prefix) + 1 :]
    return TAG_RE.sub("", body)


def parse_generation(output: str):
    """Parse ``<extra_id_k> TYPE`` pairs or the no-types sentinel."""
    if output.strip() == NO_TYPES_SENTINEL:
        return SENTINEL_NO_TYPES
    matches = list(TAG_RE.finditer(output))
    if not matches:
        raise MalformedOutput(f"no tag markers in output: {output!r}")
    head = output[: matches[0].start()]
    if head.strip():
        raise MalformedOutput(f"text before first tag marker: {head!r}")
    result: dict[int, str] = {}
    for i, m in enumerate(matches):
        idx = int(m.group(1))
        if idx in result:
            raise MalformedOutput(f"duplicate tag index {idx}")
        end = matches[i + 1].start() if i + 1 < len(matches) else len(output)
        type_name = output[m.end() : end].strip()
        if not type_name:
            raise MalformedOutput(f"empty prediction for tag {idx}")
        result[idx] = type_name
    return result


# ---------------------------------------------------------------------------
# wire protocol
# ---------------------------------------------------------------------------


def load_wire_schema() -> dict:
    """The shared request/response schema (single source of truth)."""
    data = resources.files("typeflow.data").joinpath("inference_protocol.schema.json")
    return json.loads(data.read_text(encoding="utf-8"))


def build_wire_request(snippets: list[TaggedSnippet]) -> dict:
    items = []
    for snip in snippets:
        tags = []
        for index in sorted(snip.tag_map):
            entry = snip.tag_map[index]
            tags.append(
                {
                    "index": index,
                    "symbol": entry.slice.target.symbol,
                    "spans": [s.to_json() for s in entry.spans],
                }
            )
        items.append({"scope": snip.scope, "source": snip.source, "tags": tags})
    return {"version": WIRE_VERSION, "language": WIRE_LANGUAGE, "items": items}


def parse_wire_response(obj: dict, snippets: list[TaggedSnippet]) -> list[dict[int, tuple[str, float]]]:
    results = obj.get("results")
    if not isinstance(results, list) or len(results) != len(snippets):
        raise MalformedOutput("response results do not match request items")
    out: list[dict[int, tuple[str, float]]] = []
    for snip, item in zip(snippets, results):
        preds: dict[int, tuple[str, float]] = {}
        for p in item.get("predictions", []):
            idx = p["index"]
            if idx in preds:
                raise MalformedOutput(f"duplicate tag index {idx} in response")
            preds[idx] = (p["type"], float(p.get("confidence", 1.0)))
        out.append(preds)
    return out


# ---------------------------------------------------------------------------
# backends
# ---------------------------------------------------------------------------


@dataclass
class LexiconRule:
    match: str  # "symbol" or "callee"
    pattern: re.Pattern
    type_name: str
    confidence: float


class Lexicon:
    """Ordered name/callee patterns mapping to type names."""

    def __init__(self, rules: list[LexiconRule]):
        self.rules = rules

    @staticmethod
    def from_json(obj: dict) -> "Lexicon":
        rules = []
        for i, r in enumerate(obj.get("rules", [])):
            try:
                match = r["match"]
                if match not in ("symbol", "callee"):
                    raise LexiconError(f"rule {i}: bad match kind {match!r}")
                confidence = float(r.get("confidence", 1.0))
                if not 0.0 <= confidence <= 1.0:
                    raise LexiconError(f"rule {i}: confidence out of range")
                rules.append(
                    LexiconRule(
                        match=match,
                        pattern=re.compile(r["pattern"]),
                        type_name=r["type"],
                        confidence=confidence,
                    )
                )
            except LexiconError:
                raise
            except (KeyError, re.error, TypeError, ValueError) as e:
                raise LexiconError(f"rule {i}: {e}") from e
        return Lexicon(rules)

    @staticmethod
    def load(path: str | None = None) -> "Lexicon":
        if path is None:
            text = resources.files("typeflow.data").joinpath("default_lexicon.json").read_text()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise LexiconError(f"bad lexicon JSON: {e}") from e
        return Lexicon.from_json(obj)

    def lookup(self, symbol: str, callees: list[str]) -> tuple[str, float] | None:
        for rule in self.rules:
            if rule.match == "symbol":
                if rule.pattern.search(symbol):
                    return rule.type_name, rule.confidence
            else:
                if any(rule.pattern.search(c) for c in callees):
                    return rule.type_name, rule.confidence
        return None


class HeuristicBackend:
    """Deterministic slices-aware stand-in for the neural model.

    Rule order: (1) a ``new C()`` definition names its own type, (2) a
    literal definition names the builtin type, (3) the lexicon matches the
    symbol or an invoked callee, (4) no prediction.
    """

    name = "heuristic"

    def __init__(self, lexicon: Lexicon | None = None, contract: BackendContract | None = None):
        self.lexicon = lexicon or Lexicon.load()
        self.contract = contract or BackendContract()

    def predict(self, batch: list[TaggedSnippet]) -> list[dict[int, tuple[str, float]]]:
        return [self._predict_one(snippet) for snippet in batch]

    def _predict_one(self, snippet: TaggedSnippet) -> dict[int, tuple[str, float]]:
        out: dict[int, tuple[str, float]] = {}
        for index in sorted(snippet.tag_map):
            s = snippet.tag_map[index].slice
            p = self._predict_slice(s)
            if p is not None:
                out[index] = p
        return out

    def _predict_slice(self, s: UsageSlice) -> tuple[str, float] | None:
        d = s.def_source
        if d.kind is DefKind.CALL_RESULT and (d.detail or "").startswith("new "):
            return d.detail[len("new ") :], 1.0
        if d.kind is DefKind.LITERAL and d.detail in LITERAL_MODEL_TYPES:
            return LITERAL_MODEL_TYPES[d.detail], 1.0
        callees = [c.callee for c in s.calls if c.role is CallRole.INVOKED_ON]
        return self.lexicon.lookup(s.target.symbol, callees)


class RemoteBackend:
    """HTTP client for a server speaking the shared wire protocol."""

    name = "remote"

    def __init__(self, url: str, session=None, timeout: float = 30.0):
        self.url = url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self.contract = self._fetch_contract()

    def _fetch_contract(self) -> BackendContract:
        try:
            resp = self.session.get(f"{self.url}/health", timeout=self.timeout)
        except requests.RequestException as e:
            raise BackendUnavailable(f"cannot reach backend at {self.url}: {e}") from e
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"backend health check failed with status {resp.status_code}"
            )
        body = resp.json()
        return BackendContract(
            batch_limit=body.get("batchLimit", 16),
            input_budget=body.get("inputBudget", 512),
            output_budget=body.get("outputBudget", 128),
            languages=tuple(body.get("languages", [WIRE_LANGUAGE])),
        )

    def predict(self, batch: list[TaggedSnippet]) -> list[dict[int, tuple[str, float]]]:
        payload = build_wire_request(batch)
        try:
            resp = self.session.post(
                f"{self.url}/infer", json=payload, timeout=self.timeout
            )
        except requests.RequestException as e:
            raise BackendUnavailable(f"cannot reach backend at {self.url}: {e}") from e
        if resp.status_code != 200:
            try:
                error = resp.json().get("error", resp.text)
            except ValueError:
                error = resp.text
            raise BackendUnavailable(f"backend returned {resp.status_code}: {error}")
        try:
            body = resp.json()
        except ValueError as e:
            raise MalformedOutput(f"backend response is not JSON: {e}") from e
        return parse_wire_response(body, batch)


def heuristic_backend(lexicon_path: str | None = None) -> HeuristicBackend:
    """Build the in-process deterministic backend from a lexicon file."""
    return HeuristicBackend(Lexicon.load(lexicon_path))


# ---------------------------------------------------------------------------
# the inference driver
# ---------------------------------------------------------------------------


def infer(
    groups: list[ProgramUsageSlice],
    backend,
    *,
    registry: DeclarationRegistry | None = None,
    validation_policy: str = "accept-unknown",  # strict | accept-unknown | off
    drop_set: frozenset[str] = DEFAULT_DROP_SET,
    skip_typed: bool = True,
    include_low_signal: bool = True,
    dedupe: bool = True,
    prefix: str = DEFAULT_PREFIX,
) -> list[InferencePrediction]:
    """Render groups, query the backend, and filter the answers."""
    snippets: list[TaggedSnippet] = []
    for group in groups:
        slices = [
            s
            for s in group.slices
            if (include_low_signal or not s.low_signal)
            and (not skip_typed or s.target.type_name == ANY)
        ]
        if not slices:
            continue
        filtered = ProgramUsageSlice(
            scope=group.scope,
            source=group.source,
            slices=slices,
            scope_span=group.scope_span,
            statement_offsets=group.statement_offsets,
        )
        snippet = render_tagged(filtered, backend.contract.input_budget, prefix)
        if snippet.tag_map:
            snippets.append(snippet)

    predictions: list[InferencePrediction] = []
    limit = backend.contract.batch_limit
    for start in range(0, len(snippets), limit):
        batch = snippets[start : start + limit]
        answers = backend.predict(batch)
        if len(answers) != len(batch):
            raise MalformedOutput(f"batch {start // limit}: wrong result count")
        for snip, answer in zip(batch, answers):
            for tag_index, (type_name, confidence) in sorted(answer.items()):
                entry = snip.tag_map.get(tag_index)
                if entry is None:
                    raise MalformedOutput(
                        f"batch {start // limit}: unknown tag index {tag_index} "
                        f"for scope {snip.scope}"
                    )
                predictions.append(
                    InferencePrediction(
                        scope=snip.scope,
                        tag_index=tag_index,
                        symbol=entry.slice.target.symbol,
                        type_name=type_name,
                        confidence=confidence,
                        span=entry.slice.target.span,
                    )
                )

    predictions = [p for p in predictions if not is_unhelpful(p.type_name, drop_set)]

    if registry is not None and validation_policy != "off":
        slice_by_key = {}
        for snip in snippets:
            for entry in snip.tag_map.values():
                slice_by_key[(snip.scope, entry.slice.target.symbol)] = entry.slice
        kept = []
        for p in predictions:
            s = slice_by_key.get((p.scope, p.symbol))
            if s is None:
                continue
            verdict = validate(s, p.type_name, registry)
            if verdict.status is ValidationStatus.CONSISTENT:
                p.validated = True
                kept.append(p)
            elif verdict.status is ValidationStatus.UNKNOWN_TYPE:
                if validation_policy == "accept-unknown":
                    p.validated = False
                    kept.append(p)
            # violations are discarded
        predictions = kept

    if dedupe:
        predictions = select_greedy(predictions)
    return predictions


def select_greedy(predictions: list[InferencePrediction]) -> list[InferencePrediction]:
    """Highest confidence per (scope, symbol); ties break on lowest tag."""
    best: dict[tuple[str, str], InferencePrediction] = {}
    for p in predictions:
        key = (p.scope, p.symbol)
        cur = best.get(key)
        if cur is None or (p.confidence, -p.tag_index) > (cur.confidence, -cur.tag_index):
            best[key] = p
    return sorted(best.values(), key=lambda p: (p.scope, p.tag_index, p.symbol))
