"""Inference models.

``LexiconModel`` is the deterministic default: it answers from the
request payload alone by reading the declaration site of each tagged
symbol out of the scope source, then falling back to lexicon rules.  Its
behavior deliberately mirrors the in-process heuristic backend so the two
stay interchangeable, but it is a from-scratch implementation over the
wire format (it never sees slice structures).

``load_model`` also accepts ``external:<module>:<factory>`` identifiers:
the named factory must return an object with the same ``predict_item``
surface.  That is the seam where a trained encoder-decoder model mounts;
only the lexicon model ships in-repo.
"""

from __future__ import annotations

import importlib
import json
import re
from dataclasses import dataclass
from importlib import resources

IDENT = r"[A-Za-z_$][\w$]*"
DOTTED = rf"{IDENT}(?:\.{IDENT})*"

# Everything after the declared name up to and including the initializer's
# first token: optional type annotation, then a plain (non-compound) "=".
_INIT_RE = re.compile(r"\s*(?::[\w$.<>\[\],\s]*?)?=(?!=)\s*")
_NEW_RE = re.compile(rf"new\s+({DOTTED})")
_ARROW_RE = re.compile(rf"(?:\([^()]*\)|{IDENT})\s*=>")
_INVOKE_RE = re.compile(rf"\s*\.\s*({IDENT})\s*\(")
_SELF_CALL_RE = re.compile(r"\s*\(")

_LITERAL_HEADS = (
    (re.compile(r"[\"'`]"), "string"),
    (re.compile(r"-?\d"), "number"),
    (re.compile(r"(?:true|false)\b"), "boolean"),
    (re.compile(r"(?:null|undefined)\b"), "null"),
    (re.compile(r"\{"), "Object"),
    (re.compile(r"\["), "Array"),
    (re.compile(r"function\b"), "Function"),
)


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class _Rule:
    match: str  # symbol | callee
    pattern: re.Pattern
    type_name: str
    confidence: float


class LexiconModel:
    """Deterministic lexicon-backed predictions over wire items."""

    name = "lexicon"

    def __init__(self, rules: list[_Rule]):
        self.rules = rules

    @classmethod
    def from_path(cls, path: str | None) -> "LexiconModel":
        if path is None:
            # The client package's default lexicon is the shared default.
            text = (
                resources.files("typeflow.data")
                .joinpath("default_lexicon.json")
                .read_text(encoding="utf-8")
            )
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelError(f"bad lexicon JSON: {e}") from e
        rules = []
        for i, r in enumerate(obj.get("rules", [])):
            try:
                if r["match"] not in ("symbol", "callee"):
                    raise ModelError(f"rule {i}: bad match kind {r['match']!r}")
                confidence = float(r.get("confidence", 1.0))
                if not 0.0 <= confidence <= 1.0:
                    raise ModelError(f"rule {i}: confidence out of range")
                rules.append(
                    _Rule(r["match"], re.compile(r["pattern"]), r["type"], confidence)
                )
            except ModelError:
                raise
            except (KeyError, TypeError, ValueError, re.error) as e:
                raise ModelError(f"rule {i}: {e}") from e
        return cls(rules)

    # -- prediction ------------------------------------------------------

    def predict_item(self, item: dict) -> list[dict]:
        source = item["source"]
        predictions: list[dict] = []
        for tag in sorted(item["tags"], key=lambda t: t["index"]):
            answer = self._predict_tag(source, tag)
            if answer is not None:
                type_name, confidence = answer
                predictions.append(
                    {
                        "index": tag["index"],
                        "type": type_name,
                        "confidence": confidence,
                    }
                )
        return predictions

    def _predict_tag(self, source: str, tag: dict) -> tuple[str, float] | None:
        spans = sorted(tag["spans"], key=lambda s: s["startOffset"])
        if not spans:
            return None
        data = source.encode("utf-8")
        anchor = spans[0]
        declared = self._declaration_type(data, anchor)
        if declared is not None:
            return declared, 1.0
        callees = self._invoked_callees(data, spans, tag["symbol"])
        for rule in self.rules:
            if rule.match == "symbol":
                if rule.pattern.search(tag["symbol"]):
                    return rule.type_name, rule.confidence
            elif any(rule.pattern.search(c) for c in callees):
                return rule.type_name, rule.confidence
        return None

    def _declaration_type(self, data: bytes, anchor: dict) -> str | None:
        start, end = anchor["startOffset"], anchor["endOffset"]
        before = data[max(0, start - len(b"function ")) : start]
        if before == b"function ":
            return "Function"
        after = data[end:].decode("utf-8", errors="replace")
        init = _INIT_RE.match(after)
        if init is None:
            return None
        value = after[init.end() :]
        new = _NEW_RE.match(value)
        if new is not None:
            return new.group(1)
        if _ARROW_RE.match(value):
            return "Function"
        for head, type_name in _LITERAL_HEADS:
            if head.match(value):
                return type_name
        return None

    def _invoked_callees(
        self, data: bytes, spans: list[dict], symbol: str
    ) -> list[str]:
        callees: list[str] = []
        for span in spans:
            after = data[span["endOffset"] :].decode("utf-8", errors="replace")
            invoked = _INVOKE_RE.match(after)
            if invoked is not None:
                callees.append(invoked.group(1))
            elif _SELF_CALL_RE.match(after):
                callees.append(symbol)
        return callees


def load_model(identifier: str, lexicon_path: str | None = None):
    """Resolve a model plug-in: ``lexicon`` or ``external:<module>:<factory>``."""
    if identifier == "lexicon":
        return LexiconModel.from_path(lexicon_path)
    if identifier.startswith("external:"):
        _, module_name, factory_name = identifier.split(":", 2)
        module = importlib.import_module(module_name)
        factory = getattr(module, factory_name)
        return factory()
    raise ModelError(f"unknown model identifier {identifier!r}")
