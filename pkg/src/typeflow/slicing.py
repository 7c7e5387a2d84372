"""Usage slicing.

A usage slice describes how one object is defined and interacted with
inside a single method: the definition supplying its data, the calls it
invokes or is an argument to, its reads, and the members accessed on it.
A slice starts at a definition (declaration, parameter, capture, or
reassignment) and ends before the next reassignment of the same symbol,
so each slice stands for a single runtime type.

Nested closure bodies are excluded from the enclosing method's slices;
variables a closure reads from enclosing scopes surface in the closure's
own slice list as captures, and the enclosing scope keeps a slice for the
captured variable alive (possibly with no local reads) so it can still be
classified there.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

from .graph import (
    ASSIGN_OPERATOR_NAMES,
    Graph,
    GraphNode,
    GraphNodeKind,
    OPERATOR_PREFIX,
)
from .spans import SourceSpan, span_text
from .typenames import ANY, FUNCTION, LITERAL_TYPES


class DefKind(str, Enum):
    LOCAL = "Local"
    PARAMETER = "Parameter"
    CALL_RESULT = "CallResult"
    LITERAL = "Literal"
    CAPTURE = "Capture"


@dataclass(frozen=True)
class Definition:
    """The (symbol, type) pair with its defining shape."""

    symbol: str
    type_name: str
    kind: DefKind
    span: SourceSpan
    scope: str
    detail: str | None = None  # callee, literal tag, copied symbol
    param_index: int | None = None

    def kind_text(self) -> str:
        if self.kind is DefKind.PARAMETER:
            if self.detail:
                return f"Parameter({self.param_index}:{self.detail})"
            return f"Parameter({self.param_index})"
        if self.detail is not None:
            return f"{self.kind.value}({self.detail})"
        return self.kind.value


_KIND_TEXT_RE = re.compile(r"^(Local|Parameter|CallResult|Literal|Capture)(?:\((.*)\))?$")


def parse_kind_text(text: str) -> tuple[DefKind, str | None, int | None]:
    m = _KIND_TEXT_RE.match(text)
    if not m:
        raise ValueError(f"bad defKind: {text!r}")
    kind = DefKind(m.group(1))
    detail = m.group(2)
    param_index = None
    if kind is DefKind.PARAMETER and detail is not None:
        if ":" in detail:
            idx, detail = detail.split(":", 1)
        else:
            idx, detail = detail, None
        param_index = int(idx)
    return kind, detail, param_index


class CallRole(str, Enum):
    INVOKED_ON = "InvokedOn"
    ARGUMENT_TO = "ArgumentTo"


@dataclass(frozen=True)
class ObservedCall:
    callee: str
    role: CallRole
    span: SourceSpan
    position: int | None = None  # >= 1 for ArgumentTo
    observed_arg_types: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "callee": self.callee,
            "role": self.role.value,
            "position": self.position,
            "span": self.span.to_json(),
            "argTypes": list(self.observed_arg_types),
        }


@dataclass(frozen=True)
class MemberUse:
    name: str
    span: SourceSpan

    def to_json(self) -> dict:
        return {"name": self.name, "span": self.span.to_json()}


@dataclass
class UsageSlice:
    def_source: Definition
    target: Definition
    calls: list[ObservedCall]
    usages: list[SourceSpan]
    members: list[MemberUse]
    scope: str
    low_signal: bool = False

    def to_json(self) -> dict:
        return {
            "symbol": self.target.symbol,
            "defKind": self.def_source.kind_text(),
            "typeName": self.target.type_name,
            "span": self.target.span.to_json(),
            "calls": [c.to_json() for c in self.calls],
            "usages": [u.to_json() for u in self.usages],
            "members": [m.to_json() for m in self.members],
            "lowSignal": self.low_signal,
        }

    @staticmethod
    def from_json(obj: dict, scope: str, file_id: str = "") -> "UsageSlice":
        kind, detail, param_index = parse_kind_text(obj["defKind"])
        span = SourceSpan.from_json(obj["span"], file_id)
        # Parameter/Capture defKinds without a copied-symbol detail are
        # self-definitions; only those describe the target itself.
        self_defined = detail is None and kind in (DefKind.PARAMETER, DefKind.CAPTURE)
        target = Definition(
            symbol=obj["symbol"],
            type_name=obj["typeName"],
            kind=kind if self_defined else DefKind.LOCAL,
            span=span,
            scope=scope,
            param_index=param_index if self_defined else None,
        )
        def_source = Definition(
            symbol=detail if kind is not DefKind.LITERAL and detail else obj["symbol"],
            type_name=ANY,
            kind=kind,
            span=span,
            scope=scope,
            detail=detail,
            param_index=param_index,
        )
        calls = [
            ObservedCall(
                callee=c["callee"],
                role=CallRole(c["role"]),
                span=SourceSpan.from_json(c["span"], file_id),
                position=c.get("position"),
                observed_arg_types=tuple(c.get("argTypes", [])),
            )
            for c in obj["calls"]
        ]
        usages = [SourceSpan.from_json(u, file_id) for u in obj["usages"]]
        members = [
            MemberUse(m["name"], SourceSpan.from_json(m["span"], file_id))
            for m in obj.get("members", [])
        ]
        return UsageSlice(
            def_source=def_source,
            target=target,
            calls=calls,
            usages=usages,
            members=members,
            scope=scope,
            low_signal=obj.get("lowSignal", False),
        )


@dataclass
class ProgramUsageSlice:
    """One scope's raw source paired with its slices: the inference unit."""

    scope: str
    source: str
    slices: list[UsageSlice]
    scope_span: SourceSpan | None = None
    statement_offsets: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "source": self.source,
            "span": self.scope_span.to_json() if self.scope_span else None,
            "statementOffsets": self.statement_offsets,
            "targets": [s.to_json() for s in self.slices],
        }

    @staticmethod
    def from_json(obj: dict, file_id: str = "") -> "ProgramUsageSlice":
        scope = obj["scope"]
        return ProgramUsageSlice(
            scope=scope,
            source=obj["source"],
            slices=[UsageSlice.from_json(t, scope, file_id) for t in obj["targets"]],
            scope_span=(
                SourceSpan.from_json(obj["span"], file_id) if obj.get("span") else None
            ),
            statement_offsets=list(obj.get("statementOffsets", [])),
        )


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


class _Segment:
    __slots__ = ("target", "def_source", "calls", "usages", "members", "captured", "seq")

    def __init__(self, target: Definition, def_source: Definition, seq: int):
        self.target = target
        self.def_source = def_source
        self.calls: list[ObservedCall] = []
        self.usages: list[SourceSpan] = []
        self.members: list[MemberUse] = []
        self.captured = False
        self.seq = seq


class _MethodScanner:
    def __init__(self, graph: Graph, method: GraphNode):
        self.graph = graph
        self.method = method
        self.state: dict[int, _Segment] = {}
        self.done: list[tuple[tuple, UsageSlice]] = []
        self.seq = 0
        self._param_index = {
            p.id: i for i, p in enumerate(graph.parameters(method.id))
        }
        self._decl_kind_cache: dict[int, tuple[DefKind, int | None]] = {}

    # -- segment management -------------------------------------------

    def _open(self, decl_id: int, target: Definition, def_source: Definition):
        if decl_id in self.state:
            self._close(decl_id)
        self.state[decl_id] = _Segment(target, def_source, self.seq)
        self.seq += 1

    def _close(self, decl_id: int):
        seg = self.state.pop(decl_id, None)
        if seg is None:
            return
        if not seg.usages and not seg.captured:
            return  # no usage besides the defining assignment
        slice_ = UsageSlice(
            def_source=seg.def_source,
            target=seg.target,
            calls=seg.calls,
            usages=seg.usages,
            members=seg.members,
            scope=self.method.full_name or "",
            low_signal=not seg.calls and not seg.members,
        )
        key = (seg.target.span.sort_key(), seg.seq)
        self.done.append((key, slice_))

    def _decl_kind(self, decl: GraphNode) -> tuple[DefKind, int | None]:
        if decl.id in self._decl_kind_cache:
            return self._decl_kind_cache[decl.id]
        if decl.kind is GraphNodeKind.PARAMETER:
            if decl.id in self._param_index:
                out = (DefKind.PARAMETER, self._param_index[decl.id])
            else:
                out = (DefKind.CAPTURE, None)
        elif self.graph.owning_method(decl.id) is not None and (
            self.graph.owning_method(decl.id).id != self.method.id
        ):
            out = (DefKind.CAPTURE, None)
        else:
            out = (DefKind.LOCAL, None)
        self._decl_kind_cache[decl.id] = out
        return out

    # -- definition shapes ---------------------------------------------

    def _value_definition(self, value: GraphNode | None, fallback: Definition) -> Definition:
        scope = self.method.full_name or ""
        if value is None:
            return fallback
        g = self.graph
        if value.kind is GraphNodeKind.LITERAL:
            tag = value.name or "object"
            return Definition(
                symbol="",
                type_name=LITERAL_TYPES.get(tag, ANY),
                kind=DefKind.LITERAL,
                span=value.span,
                scope=scope,
                detail=tag,
            )
        if value.kind is GraphNodeKind.METHOD_REF:
            return Definition(
                symbol="",
                type_name=FUNCTION,
                kind=DefKind.LITERAL,
                span=value.span,
                scope=scope,
                detail="function",
            )
        if value.kind is GraphNodeKind.CALL:
            name = value.name or "<anonymous>"
            if name.startswith("new "):
                type_name = name[len("new ") :]
            else:
                type_name = value.type_full_name
            return Definition(
                symbol="",
                type_name=type_name,
                kind=DefKind.CALL_RESULT,
                span=value.span,
                scope=scope,
                detail=name,
            )
        if value.kind is GraphNodeKind.IDENTIFIER:
            decl = g.ref_target(value.id)
            if decl is None:
                return fallback
            kind, idx = self._decl_kind(decl)
            return Definition(
                symbol=value.name or "",
                type_name=decl.type_full_name,
                kind=kind,
                span=value.span,
                scope=scope,
                detail=value.name,
                param_index=idx,
            )
        if value.kind is GraphNodeKind.MEMBER_ACCESS:
            dotted = self._dotted(value)
            return Definition(
                symbol=dotted,
                type_name=ANY,
                kind=DefKind.LOCAL,
                span=value.span,
                scope=scope,
                detail=dotted,
            )
        return fallback

    def _dotted(self, member: GraphNode) -> str:
        parts: list[str] = []
        node = member
        g = self.graph
        while node.kind is GraphNodeKind.MEMBER_ACCESS:
            parts.append(node.name or "<computed>")
            children = g.children(node.id)
            if not children:
                break
            node = children[0]
        root = node.name if node.kind is GraphNodeKind.IDENTIFIER else "<expr>"
        parts.append(root or "<expr>")
        return ".".join(reversed(parts))

    def _self_definition(self, decl: GraphNode, kind: DefKind, idx: int | None) -> Definition:
        return Definition(
            symbol=decl.name or "",
            type_name=decl.type_full_name,
            kind=kind,
            span=decl.span,
            scope=self.method.full_name or "",
            param_index=idx,
        )

    # -- the scan ---------------------------------------------------------

    def scan(self) -> list[UsageSlice]:
        g = self.graph
        for i, p in enumerate(g.parameters(self.method.id)):
            d = self._self_definition(p, DefKind.PARAMETER, i)
            self._open(p.id, d, d)
        for decl in sorted(g.captured_decls(self.method.id), key=lambda n: n.span.sort_key()):
            d = self._self_definition(decl, DefKind.CAPTURE, None)
            self._open(decl.id, d, d)
        for stmt in self.graph.body_statements(self.method.id):
            self._walk(stmt)
        for decl_id in list(self.state):
            self._close(decl_id)
        self.done.sort(key=lambda pair: pair[0])
        return [s for _, s in self.done]

    def _walk(self, node: GraphNode):
        g = self.graph
        kind = node.kind
        if kind is GraphNodeKind.CALL and (node.name or "").startswith(OPERATOR_PREFIX):
            self._assignment(node)
            return
        if kind is GraphNodeKind.CALL:
            self._real_call(node)
            return
        if kind is GraphNodeKind.IDENTIFIER:
            self._read(node)
            return
        if kind is GraphNodeKind.MEMBER_ACCESS:
            children = g.children(node.id)
            base = children[0] if children else None
            if base is not None and base.kind is GraphNodeKind.IDENTIFIER:
                decl = self._read(base)
                if decl is not None and node.name:
                    seg = self.state.get(decl.id)
                    if seg is not None:
                        seg.members.append(MemberUse(node.name, node.span))
            elif base is not None:
                self._walk(base)
            for extra in children[1:]:
                self._walk(extra)
            return
        if kind is GraphNodeKind.METHOD_REF:
            self._closure_event(node.full_name or "")
            return
        if kind is GraphNodeKind.LOCAL:
            self._bare_local(node)
            return
        for child in g.children(node.id):
            self._walk(child)

    def _read(self, ident: GraphNode) -> GraphNode | None:
        decl = self.graph.ref_target(ident.id)
        if decl is None:
            return None
        seg = self.state.get(decl.id)
        if seg is not None:
            seg.usages.append(ident.span)
        return decl

    def _bare_local(self, local: GraphNode):
        # Uninitialized declaration, import binding, or function binding.
        bound = self._bound_method(local)
        if bound is not None:
            d_tgt = self._self_definition(local, DefKind.LOCAL, None)
            d_def = Definition(
                symbol="",
                type_name=FUNCTION,
                kind=DefKind.LITERAL,
                span=bound.span,
                scope=self.method.full_name or "",
                detail="function",
            )
            self._open(local.id, d_tgt, d_def)
            self._closure_event(bound.full_name or "")
            return
        d = self._self_definition(local, DefKind.LOCAL, None)
        self._open(local.id, d, d)

    def _bound_method(self, local: GraphNode) -> GraphNode | None:
        for m in self.graph.methods():
            if m.name == local.name and m.span.contains(local.span) and m.id != self.method.id:
                return m
        return None

    def _assignment(self, assign: GraphNode):
        g = self.graph
        args = g.arguments(assign.id)
        lhs = args.get(1)
        rhs = args.get(2)
        if rhs is not None:
            self._walk(rhs)  # reads on the right side happen first
        if lhs is None:
            return
        compound = assign.name != ASSIGN_OPERATOR_NAMES["="]
        if lhs.kind is GraphNodeKind.LOCAL:
            d_tgt = self._self_definition(lhs, DefKind.LOCAL, None)
            d_def = d_tgt if compound else self._value_definition(rhs, d_tgt)
            self._open(lhs.id, d_tgt, d_def)
            return
        if lhs.kind is GraphNodeKind.IDENTIFIER:
            decl = g.ref_target(lhs.id)
            if decl is None:
                return
            kind, idx = self._decl_kind(decl)
            d_tgt = Definition(
                symbol=lhs.name or "",
                type_name=decl.type_full_name,
                kind=kind,
                span=lhs.span,
                scope=self.method.full_name or "",
                param_index=idx,
            )
            d_def = d_tgt if compound else self._value_definition(rhs, d_tgt)
            self._open(decl.id, d_tgt, d_def)
            return
        # Member write: the base object is read, its slice is not split.
        self._walk(lhs)

    def _real_call(self, call: GraphNode):
        g = self.graph
        args = g.arguments(call.id)
        arg_index = {node.id: k for k, node in args.items()}
        arg_types = tuple(
            args[k].type_full_name for k in sorted(args) if k >= 1
        )
        callee = call.name or "<anonymous>"
        is_new = callee.startswith("new ")
        for child in g.children(call.id):
            k = arg_index.get(child.id)
            if is_new and k is None:
                # Constructor-name position: a type reference, not a value
                # read, so it never contributes usages.
                continue
            if child.kind is GraphNodeKind.IDENTIFIER:
                decl = self._read(child)
                if decl is None:
                    continue
                seg = self.state.get(decl.id)
                if seg is None:
                    continue
                if k == 0:
                    seg.calls.append(
                        ObservedCall(
                            callee, CallRole.INVOKED_ON, call.span,
                            observed_arg_types=arg_types,
                        )
                    )
                elif k is not None:
                    seg.calls.append(
                        ObservedCall(
                            callee, CallRole.ARGUMENT_TO, call.span,
                            position=k, observed_arg_types=arg_types,
                        )
                    )
                elif not is_new:
                    # Callee of a direct call: the target itself is invoked.
                    seg.calls.append(
                        ObservedCall(
                            callee, CallRole.INVOKED_ON, call.span,
                            observed_arg_types=arg_types,
                        )
                    )
            elif child.kind is GraphNodeKind.MEMBER_ACCESS and k == 0:
                # Receiver is a member chain: record the member read and the
                # invocation against the chain's base variable only.
                self._walk(child)
            else:
                self._walk(child)

    def _closure_event(self, full_name: str):
        if not full_name:
            return
        prefix = full_name + ":"
        captured: set[int] = set()
        for m in self.graph.methods():
            if m.full_name == full_name or (m.full_name or "").startswith(prefix):
                captured.update(d.id for d in self.graph.captured_decls(m.id))
        for decl_id in captured:
            seg = self.state.get(decl_id)
            if seg is not None:
                seg.captured = True


def extract_slices(graph: Graph) -> list[UsageSlice]:
    """One slice per live definition segment with at least one usage."""
    out: list[tuple[tuple, UsageSlice]] = []
    for method in sorted(graph.methods(), key=lambda m: m.span.sort_key()):
        scanner = _MethodScanner(graph, method)
        slices = scanner.scan()
        for i, s in enumerate(slices):
            key = (method.span.sort_key(), method.full_name or "", s.target.span.sort_key(), i)
            out.append((key, s))
    out.sort(key=lambda pair: pair[0])
    return [s for _, s in out]


def group_program_slices(graph: Graph, slices: list[UsageSlice]) -> list[ProgramUsageSlice]:
    """Group slices by scope and attach the scope's raw source."""
    by_scope: dict[str, list[UsageSlice]] = {}
    for s in slices:
        by_scope.setdefault(s.scope, []).append(s)
    groups: list[ProgramUsageSlice] = []
    for method in sorted(graph.methods(), key=lambda m: m.span.sort_key()):
        scoped = by_scope.get(method.full_name or "")
        if not scoped:
            continue
        base = method.span.start_offset
        offsets = sorted(
            {stmt.span.start_offset - base for stmt in graph.body_statements(method.id)}
        )
        groups.append(
            ProgramUsageSlice(
                scope=method.full_name or "",
                source=span_text(graph.source, method.span),
                slices=scoped,
                scope_span=method.span,
                statement_offsets=offsets,
            )
        )
    return groups


def slice_types_with_annotations(graph: Graph) -> list[Definition]:
    """Definitions for every declaration, typed by user annotations only."""
    defs: list[Definition] = []
    for method in sorted(graph.methods(), key=lambda m: m.span.sort_key()):
        params = graph.parameters(method.id)
        for i, p in enumerate(params):
            defs.append(
                Definition(
                    symbol=p.name or "",
                    type_name=graph.annotations.get(p.id, ANY),
                    kind=DefKind.PARAMETER,
                    span=p.span,
                    scope=method.full_name or "",
                    param_index=i,
                )
            )
    for node in graph.nodes:
        if node.kind is GraphNodeKind.LOCAL:
            method = graph.owning_method(node.id)
            defs.append(
                Definition(
                    symbol=node.name or "",
                    type_name=graph.annotations.get(node.id, ANY),
                    kind=DefKind.LOCAL,
                    span=node.span,
                    scope=(method.full_name if method else None) or "",
                )
            )
    defs.sort(key=lambda d: d.span.sort_key())
    return defs


def slices_to_json(graph: Graph, groups: list[ProgramUsageSlice]) -> dict:
    return {
        "file": graph.file_id,
        "slices": [g.to_json() for g in groups],
    }


def slices_from_json(obj: dict) -> tuple[str, list[ProgramUsageSlice]]:
    file_id = obj["file"]
    return file_id, [ProgramUsageSlice.from_json(g, file_id) for g in obj["slices"]]


def canonical_slices_text(graph: Graph, slices: list[UsageSlice]) -> str:
    """Canonical slice serialization used for oracle comparison.

    Rendering hints (scope spans, statement offsets) are omitted; the
    document captures slice semantics only.
    """
    groups = group_program_slices(graph, slices)
    doc = {
        "file": graph.file_id,
        "slices": [
            {
                "scope": g.scope,
                "source": g.source,
                "targets": [s.to_json() for s in g.slices],
            }
            for g in groups
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
