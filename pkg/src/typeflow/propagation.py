"""Flow-insensitive type propagation.

Each iteration scans assignments and annotations in source order and
appends the assigned types to a file-scoped map.  After the final
iteration, symbols whose set is a singleton get that type written to
their declaration node (and to every identifier referring to it);
symbols with several associated types keep the full set in the map but
stay ANY on the node.  The pass deliberately runs a small fixed number
of iterations instead of a fixpoint: one extra round is enough to move
caller/callee hints across intra-file call edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .graph import (
    ASSIGN_OPERATOR_NAMES,
    Graph,
    GraphNode,
    GraphNodeKind,
    OPERATOR_PREFIX,
)
from .errors import ConflictError
from .typenames import ANY, FUNCTION, LITERAL_TYPES

DEFAULT_ITERATIONS = 2


class HintSubject(str, Enum):
    PARAMETER_OF = "ParameterOf"
    RETURN_OF = "ReturnOf"


class HintProvenance(str, Enum):
    ANNOTATION = "Annotation"
    ASSIGNMENT = "Assignment"
    CALL_SITE_ARGUMENT = "CallSiteArgument"
    CALL_SITE_RESULT = "CallSiteResult"
    INFERENCE = "Inference"


@dataclass(frozen=True)
class TypeHint:
    subject: HintSubject
    method: str
    index: int | None
    type_name: str
    provenance: HintProvenance

    def to_json(self) -> dict:
        return {
            "subject": self.subject.value,
            "method": self.method,
            "index": self.index,
            "type": self.type_name,
            "provenance": self.provenance.value,
        }


class TypeAssignmentMap:
    """Scope-qualified symbol -> ordered set of type names (never ANY)."""

    def __init__(self):
        self._types: dict[tuple[str, str], dict[str, None]] = {}
        self.hints: list[TypeHint] = []

    def add(self, scope: str, symbol: str, type_name: str) -> bool:
        if not type_name or type_name == ANY:
            return False
        bucket = self._types.setdefault((scope, symbol), {})
        if type_name in bucket:
            return False
        bucket[type_name] = None
        return True

    def types(self, scope: str, symbol: str) -> list[str]:
        return list(self._types.get((scope, symbol), {}))

    def singleton(self, scope: str, symbol: str) -> str | None:
        ts = self.types(scope, symbol)
        return ts[0] if len(ts) == 1 else None

    def keys(self) -> list[tuple[str, str]]:
        return list(self._types)

    def membership(self) -> dict[tuple[str, str], frozenset[str]]:
        return {k: frozenset(v) for k, v in self._types.items()}

    def snapshot(self) -> dict[tuple[str, str], tuple[str, ...]]:
        return {k: tuple(v) for k, v in self._types.items()}

    def to_json(self) -> dict:
        return {
            f"{scope}:{symbol}": list(types)
            for (scope, symbol), types in sorted(self._types.items())
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, TypeAssignmentMap):
            return NotImplemented
        return self.snapshot() == other.snapshot()


@dataclass
class _PassState:
    map: TypeAssignmentMap = field(default_factory=TypeAssignmentMap)
    return_types: dict[str, dict[str, None]] = field(default_factory=dict)

    def add_return(self, method: str, type_name: str):
        if type_name and type_name != ANY:
            self.return_types.setdefault(method, {})[type_name] = None

    def return_singleton(self, method: str) -> str | None:
        ts = list(self.return_types.get(method, {}))
        return ts[0] if len(ts) == 1 else None


class _Propagator:
    def __init__(self, graph: Graph):
        self.g = graph
        self.state = _PassState()
        self._decl_scope: dict[int, str] = {}
        self._methods = sorted(
            graph.methods(),
            key=lambda m: (m.span.start_offset, -m.span.end_offset),
        )

    def decl_key(self, decl: GraphNode) -> tuple[str, str]:
        if decl.id not in self._decl_scope:
            method = self.g.owning_method(decl.id)
            self._decl_scope[decl.id] = (method.full_name if method else None) or ""
        return self._decl_scope[decl.id], decl.name or ""

    # -- expression typing under current knowledge ----------------------

    def type_of(self, node: GraphNode | None, scope: str) -> str:
        if node is None:
            return ANY
        g = self.g
        kind = node.kind
        if kind is GraphNodeKind.LITERAL:
            return LITERAL_TYPES.get(node.name or "", ANY)
        if kind is GraphNodeKind.METHOD_REF:
            return FUNCTION
        if kind is GraphNodeKind.CALL:
            name = node.name or ""
            if name.startswith(OPERATOR_PREFIX):
                return ANY
            if name.startswith("new "):
                return name[len("new ") :]
            target = g.call_target(node.id)
            if target is not None:
                hinted = self.state.return_singleton(target.full_name or "")
                if hinted:
                    return hinted
            return ANY
        if kind is GraphNodeKind.IDENTIFIER:
            decl = g.ref_target(node.id)
            if decl is not None:
                s, sym = self.decl_key(decl)
                return self.state.map.singleton(s, sym) or ANY
            return self.state.map.singleton(scope, node.name or "") or ANY
        if kind is GraphNodeKind.MEMBER_ACCESS:
            qualified = self._member_key(node)
            if qualified:
                return self.state.map.singleton(scope, qualified) or ANY
            return ANY
        return ANY

    def _member_key(self, member: GraphNode) -> str | None:
        if not member.name:
            return None
        children = self.g.children(member.id)
        if not children:
            return None
        base = children[0]
        if base.kind is GraphNodeKind.IDENTIFIER and base.name:
            return f"{base.name}.{member.name}"
        return None

    # -- one iteration ---------------------------------------------------

    def iterate(self):
        self._seed_known_types()
        for method in self._methods:
            scope = method.full_name or ""
            for stmt in self.g.body_statements(method.id):
                self._visit(stmt, scope)

    def _seed_known_types(self):
        for node in self.g.nodes:
            if node.kind in (GraphNodeKind.LOCAL, GraphNodeKind.PARAMETER):
                if node.type_full_name != ANY:
                    scope, sym = self.decl_key(node)
                    self.state.map.add(scope, sym, node.type_full_name)
        for method in self._methods:
            ann = self.g.annotations.get(method.id)
            if ann:
                self.state.add_return(method.full_name or "", ann)

    def _visit(self, node: GraphNode, scope: str):
        name = node.name or ""
        if node.kind is GraphNodeKind.CALL and name in ASSIGN_OPERATOR_NAMES.values():
            args = self.g.arguments(node.id)
            lhs, rhs = args.get(1), args.get(2)
            if rhs is not None:
                self._visit(rhs, scope)
            compound = name != ASSIGN_OPERATOR_NAMES["="]
            if lhs is not None and not compound:
                value_type = self.type_of(rhs, scope)
                self._record_assignment(lhs, value_type, scope)
            return
        if node.kind is GraphNodeKind.CALL and not name.startswith(OPERATOR_PREFIX):
            for child in self.g.children(node.id):
                self._visit(child, scope)
            self._call_hints(node, scope)
            return
        if node.kind is GraphNodeKind.RETURN:
            children = self.g.children(node.id)
            if children:
                self._visit(children[0], scope)
                self.state.add_return(scope, self.type_of(children[0], scope))
                t = self.type_of(children[0], scope)
                if t != ANY:
                    self.state.map.hints.append(
                        TypeHint(
                            HintSubject.RETURN_OF, scope, None, t,
                            HintProvenance.ASSIGNMENT,
                        )
                    )
            return
        for child in self.g.children(node.id):
            self._visit(child, scope)

    def _record_assignment(self, lhs: GraphNode, value_type: str, scope: str):
        if value_type == ANY:
            return
        if lhs.kind is GraphNodeKind.LOCAL:
            s, sym = self.decl_key(lhs)
            self.state.map.add(s, sym, value_type)
        elif lhs.kind is GraphNodeKind.IDENTIFIER:
            decl = self.g.ref_target(lhs.id)
            if decl is not None:
                s, sym = self.decl_key(decl)
                self.state.map.add(s, sym, value_type)
            else:
                self.state.map.add(scope, lhs.name or "", value_type)
        elif lhs.kind is GraphNodeKind.MEMBER_ACCESS:
            qualified = self._member_key(lhs)
            if qualified:
                self.state.map.add(scope, qualified, value_type)

    def _call_hints(self, call: GraphNode, scope: str):
        target = self.g.call_target(call.id)
        if target is None:
            return
        params = self.g.parameters(target.id)
        args = self.g.arguments(call.id)
        callee_scope = target.full_name or ""
        for k, arg in sorted(args.items()):
            if k < 1 or k - 1 >= len(params):
                continue
            t = self.type_of(arg, scope)
            if t == ANY:
                continue
            param = params[k - 1]
            s, sym = self.decl_key(param)
            if self.state.map.add(s, sym, t):
                self.state.map.hints.append(
                    TypeHint(
                        HintSubject.PARAMETER_OF, callee_scope, k - 1, t,
                        HintProvenance.CALL_SITE_ARGUMENT,
                    )
                )
        hinted = self.state.return_singleton(callee_scope)
        if hinted:
            self.state.map.hints.append(
                TypeHint(
                    HintSubject.RETURN_OF, callee_scope, None, hinted,
                    HintProvenance.CALL_SITE_RESULT,
                )
            )

    # -- finalize ----------------------------------------------------------

    def finalize(self):
        g = self.g
        for node in g.nodes:
            if node.kind in (GraphNodeKind.LOCAL, GraphNodeKind.PARAMETER):
                ann = g.annotations.get(node.id)
                if ann:
                    node.type_full_name = ann
                    continue
                if node.type_full_name != ANY:
                    continue
                scope, sym = self.decl_key(node)
                single = self.state.map.singleton(scope, sym)
                if single:
                    node.type_full_name = single
        for node in g.nodes:
            if node.kind is GraphNodeKind.IDENTIFIER and node.type_full_name == ANY:
                decl = g.ref_target(node.id)
                if decl is not None and decl.type_full_name != ANY:
                    node.type_full_name = decl.type_full_name
            elif node.kind is GraphNodeKind.LITERAL and node.type_full_name == ANY:
                node.type_full_name = LITERAL_TYPES.get(node.name or "", ANY)
            elif node.kind is GraphNodeKind.METHOD and node.type_full_name == ANY:
                single = self.state.return_singleton(node.full_name or "")
                if single:
                    node.type_full_name = single
        for node in g.nodes:
            if node.kind is not GraphNodeKind.CALL or node.type_full_name != ANY:
                continue
            name = node.name or ""
            if name.startswith("new "):
                node.type_full_name = name[len("new ") :]
            elif name in ASSIGN_OPERATOR_NAMES.values():
                value = self.g.arguments(node.id).get(2)
                if value is not None and value.type_full_name != ANY:
                    node.type_full_name = value.type_full_name
            elif name.startswith(OPERATOR_PREFIX):
                continue
            else:
                target = g.call_target(node.id)
                if target is not None:
                    single = self.state.return_singleton(target.full_name or "")
                    if single:
                        node.type_full_name = single


def propagate(graph: Graph, iterations: int = DEFAULT_ITERATIONS) -> tuple[Graph, TypeAssignmentMap]:
    """Run the propagation pass; returns a typed copy and the symbol map."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    g = graph.copy()
    prop = _Propagator(g)
    for _ in range(iterations):
        prop.iterate()
    prop.finalize()
    return g, prop.state.map


def repropagate_with_inferences(graph: Graph, accepted: list) -> Graph:
    """Write accepted predictions into declarations, then propagate once more.

    Raises ConflictError when a prediction contradicts an explicit user
    annotation; nodes already typed by earlier passes are left alone.
    """
    g = graph.copy()
    for pred in accepted:
        decl = _find_decl(g, pred.scope, pred.symbol)
        if decl is None:
            continue
        ann = g.annotations.get(decl.id)
        if ann and ann != pred.type_name:
            raise ConflictError(
                f"prediction {pred.type_name!r} for {pred.scope}:{pred.symbol} "
                f"conflicts with annotation {ann!r}"
            )
        if decl.type_full_name == ANY:
            decl.type_full_name = pred.type_name
    typed, _ = propagate(g, iterations=1)
    return typed


def _find_decl(graph: Graph, scope: str, symbol: str) -> GraphNode | None:
    method = graph.method_by_full_name(scope)
    if method is None:
        return None
    for p in graph.parameters(method.id):
        if p.name == symbol:
            return p
    for node in graph.nodes:
        if node.kind is GraphNodeKind.LOCAL and node.name == symbol:
            owner = graph.owning_method(node.id)
            if owner is not None and owner.full_name == scope:
                return node
    # Captured symbol: fall back to the declaration visible from the scope.
    for node in graph.nodes:
        if node.kind in (GraphNodeKind.LOCAL, GraphNodeKind.PARAMETER) and node.name == symbol:
            return node
    return None
