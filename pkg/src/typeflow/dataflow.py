"""Intraprocedural taint tracking over the typed graph.

Taint seeds at reads of parameters/locals whose recovered type is in the
query's source set (optionally restricted to one member access, e.g.
``.body``).  It propagates through assignment copies, object/array literal
embedding, member reads on tainted values, call pass-through (unless the
callee is a configured sanitizer), and into closures via captured
variables.  A flow is reported for every sink call whose matched argument
is tainted.  Tracking never crosses call-graph edges; this matches the
partial-program setting the graph is built for.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass

from .graph import (
    ASSIGN_OPERATOR_NAMES,
    Graph,
    GraphNode,
    GraphNodeKind,
    OPERATOR_PREFIX,
    typed_node_counts,
)
from .errors import MismatchError


@dataclass(frozen=True)
class TaintQuery:
    source_types: frozenset[str]
    sink_callee: str  # literal name or glob, e.g. "*.query"
    source_member: str | None = None
    sink_arg_positions: frozenset[int] | None = None  # 0 = receiver; None = any
    sanitizers: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.source_types:
            raise ValueError("source_types must be nonempty")


@dataclass
class TaintFlow:
    steps: list[int]
    scope: str

    def to_json(self, graph: Graph) -> dict:
        return {
            "scope": self.scope,
            "steps": [
                {
                    "nodeId": nid,
                    "kind": graph.node(nid).kind.value,
                    "name": graph.node(nid).name,
                    "span": graph.node(nid).span.to_json(),
                }
                for nid in self.steps
            ],
        }


class _TaintScanner:
    def __init__(self, graph: Graph, query: TaintQuery):
        self.g = graph
        self.q = query
        self.flows: list[TaintFlow] = []
        self._seen_sinks: set[tuple[int, int]] = set()

    def run(self):
        program = min(
            self.g.methods(),
            key=lambda m: (m.span.start_offset, -m.span.end_offset),
        )
        self._scan_method(program, {})
        return self.flows

    # -- helpers -----------------------------------------------------------

    def _is_source_decl(self, decl: GraphNode | None) -> bool:
        return (
            decl is not None
            and decl.kind in (GraphNodeKind.PARAMETER, GraphNodeKind.LOCAL)
            and decl.type_full_name in self.q.source_types
        )

    def _sink_matches(self, call: GraphNode) -> bool:
        name = call.name or ""
        if name.startswith(OPERATOR_PREFIX):
            return False
        candidates = {name}
        receiver = self.g.arguments(call.id).get(0)
        if receiver is not None:
            recv_text = self._display(receiver)
            if recv_text:
                candidates.add(f"{recv_text}.{name}")
        return any(fnmatch.fnmatchcase(c, self.q.sink_callee) for c in candidates)

    def _display(self, node: GraphNode) -> str | None:
        if node.kind is GraphNodeKind.IDENTIFIER:
            return node.name
        if node.kind is GraphNodeKind.MEMBER_ACCESS and node.name:
            children = self.g.children(node.id)
            if children:
                base = self._display(children[0])
                if base:
                    return f"{base}.{node.name}"
        return None

    # -- the scan ---------------------------------------------------------

    def _scan_method(self, method: GraphNode, inherited: dict[int, list[int]]):
        taint: dict[int, list[int]] = dict(inherited)
        for stmt in self.g.body_statements(method.id):
            self._eval(stmt, taint, method)

    def _eval(
        self, node: GraphNode, taint: dict[int, list[int]], method: GraphNode
    ) -> list[int] | None:
        g = self.g
        kind = node.kind
        name = node.name or ""
        if kind is GraphNodeKind.CALL and name in ASSIGN_OPERATOR_NAMES.values():
            return self._eval_assignment(node, taint, method)
        if kind is GraphNodeKind.CALL:
            return self._eval_call(node, taint, method)
        if kind is GraphNodeKind.IDENTIFIER:
            decl = g.ref_target(node.id)
            if decl is not None and decl.id in taint:
                return taint[decl.id] + [node.id]
            if self._is_source_decl(decl) and self.q.source_member is None:
                return [node.id]
            return None
        if kind is GraphNodeKind.LITERAL:
            chains = [self._eval(c, taint, method) for c in g.children(node.id)]
            live = [c for c in chains if c]
            if live:
                return live[0] + [node.id]
            return None
        if kind is GraphNodeKind.MEMBER_ACCESS:
            return self._eval_member(node, taint, method)
        if kind is GraphNodeKind.METHOD_REF:
            target = g.method_by_full_name(node.full_name or "")
            if target is not None:
                self._scan_method(target, dict(taint))
            return None
        if kind is GraphNodeKind.LOCAL:
            bound = self._bound_method(node, method)
            if bound is not None:
                self._scan_method(bound, dict(taint))
            return None
        result: list[int] | None = None
        for child in g.children(node.id):
            chain = self._eval(child, taint, method)
            if chain and result is None:
                result = chain
        return result

    def _eval_member(
        self, node: GraphNode, taint: dict[int, list[int]], method: GraphNode
    ) -> list[int] | None:
        g = self.g
        children = g.children(node.id)
        base = children[0] if children else None
        for extra in children[1:]:
            self._eval(extra, taint, method)
        if base is None:
            return None
        base_chain = self._eval(base, taint, method)
        if base_chain:
            return base_chain + [node.id]
        if (
            self.q.source_member is not None
            and node.name == self.q.source_member
            and base.kind is GraphNodeKind.IDENTIFIER
            and self._is_source_decl(g.ref_target(base.id))
        ):
            return [base.id, node.id]
        return None

    def _eval_assignment(
        self, node: GraphNode, taint: dict[int, list[int]], method: GraphNode
    ) -> None:
        g = self.g
        args = g.arguments(node.id)
        lhs, rhs = args.get(1), args.get(2)
        rhs_chain = self._eval(rhs, taint, method) if rhs is not None else None
        if lhs is None:
            return None
        compound = (node.name or "") != ASSIGN_OPERATOR_NAMES["="]
        if lhs.kind is GraphNodeKind.LOCAL:
            decl = lhs
        elif lhs.kind is GraphNodeKind.IDENTIFIER:
            decl = g.ref_target(lhs.id)
        else:
            # Member write: a tainted value stored into an object taints it.
            if rhs_chain and lhs.kind is GraphNodeKind.MEMBER_ACCESS:
                children = g.children(lhs.id)
                base = children[0] if children else None
                if base is not None and base.kind is GraphNodeKind.IDENTIFIER:
                    base_decl = g.ref_target(base.id)
                    if base_decl is not None:
                        taint[base_decl.id] = rhs_chain + [base_decl.id]
            self._eval(lhs, taint, method)
            return None
        if decl is None:
            return None
        if rhs_chain:
            taint[decl.id] = rhs_chain + [decl.id]
        elif not compound:
            taint.pop(decl.id, None)  # overwritten with a clean value
        return None

    def _eval_call(
        self, node: GraphNode, taint: dict[int, list[int]], method: GraphNode
    ) -> list[int] | None:
        g = self.g
        args = g.arguments(node.id)
        arg_ids = {n.id: k for k, n in args.items()}
        is_sink = self._sink_matches(node)
        first_chain: list[int] | None = None
        for child in g.children(node.id):
            chain = self._eval(child, taint, method)
            if not chain:
                continue
            if first_chain is None:
                first_chain = chain
            position = arg_ids.get(child.id)
            if is_sink and position is not None:
                wanted = self.q.sink_arg_positions
                if wanted is None or position in wanted:
                    key = (node.id, position)
                    if key not in self._seen_sinks:
                        self._seen_sinks.add(key)
                        self.flows.append(
                            TaintFlow(steps=list(chain), scope=method.full_name or "")
                        )
        if first_chain is None:
            return None
        callee = node.name or ""
        if callee in self.q.sanitizers:
            return None
        return first_chain + [node.id]

    def _bound_method(self, local: GraphNode, method: GraphNode) -> GraphNode | None:
        for m in self.g.methods():
            if m.name == local.name and m.span.contains(local.span) and m.id != method.id:
                return m
        return None


def run_query(graph: Graph, query: TaintQuery) -> list[TaintFlow]:
    """All source-to-sink flows the query describes, in scan order."""
    return _TaintScanner(graph, query).run()


# ---------------------------------------------------------------------------
# typed-node coverage
# ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    file: str
    before_typed: int
    after_typed: int
    counted: int

    @property
    def before_ratio(self) -> float:
        return self.before_typed / self.counted if self.counted else 0.0

    @property
    def after_ratio(self) -> float:
        return self.after_typed / self.counted if self.counted else 0.0

    @property
    def delta(self) -> float:
        return self.after_ratio - self.before_ratio

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "counted": self.counted,
            "beforeTyped": self.before_typed,
            "afterTyped": self.after_typed,
            "before": self.before_ratio,
            "after": self.after_ratio,
            "delta": self.delta,
        }


def typed_coverage_report(before: Graph, after: Graph) -> CoverageReport:
    """Typed-node ratios before/after inference for one file."""
    def shape(g: Graph) -> list[tuple]:
        return sorted((n.kind.value, n.span.sort_key(), n.name or "") for n in g.nodes)

    if before.file_id != after.file_id or shape(before) != shape(after):
        raise MismatchError("graphs are not structurally identical")
    b_typed, counted = typed_node_counts(before)
    a_typed, _ = typed_node_counts(after)
    return CoverageReport(
        file=before.file_id,
        before_typed=b_typed,
        after_typed=a_typed,
        counted=counted,
    )


def aggregate_coverage(reports: list[CoverageReport]) -> dict:
    """Per-file reports plus the mean of per-file deltas."""
    if not reports:
        return {"files": [], "meanBefore": 0.0, "meanAfter": 0.0, "meanDelta": 0.0}
    return {
        "files": [r.to_json() for r in reports],
        "meanBefore": sum(r.before_ratio for r in reports) / len(reports),
        "meanAfter": sum(r.after_ratio for r in reports) / len(reports),
        "meanDelta": sum(r.delta for r in reports) / len(reports),
    }


def check_flow_path(graph: Graph, flow: TaintFlow, query: TaintQuery) -> bool:
    """Mechanically replay a flow along graph edges per the taint rules."""
    steps = flow.steps
    if not steps:
        return False
    first = graph.node(steps[0])
    if first.kind is GraphNodeKind.IDENTIFIER:
        decl = graph.ref_target(first.id)
        if decl is None or decl.type_full_name not in query.source_types:
            return False
    else:
        return False
    parents: dict[int, int] = {}
    for e in graph.edges:
        if e.kind.value == "AST":
            parents[e.dst] = e.src
    for a, b in zip(steps, steps[1:]):
        if not _step_ok(graph, parents, a, b):
            return False
    last = graph.node(steps[-1])
    for e in graph.edges:
        if e.kind.value == "ARGUMENT" and e.dst == last.id:
            call = graph.node(e.src)
            if not (call.name or "").startswith(OPERATOR_PREFIX):
                return True
    return False


def _step_ok(graph: Graph, parents: dict[int, int], a: int, b: int) -> bool:
    node_b = graph.node(b)
    # b contains a (literal embedding, member read, call pass-through)
    cur = a
    while cur in parents:
        cur = parents[cur]
        if cur == b:
            return True
    # b reads a declaration: REF(b) == a
    ref = graph.ref_target(b)
    if ref is not None and ref.id == a:
        return True
    # b is a declaration written from a subtree containing a
    if node_b.kind in (GraphNodeKind.LOCAL, GraphNodeKind.PARAMETER, GraphNodeKind.IDENTIFIER):
        for e in graph.edges:
            if e.kind.value == "ARGUMENT" and e.index == 1:
                assign = graph.node(e.src)
                if not (assign.name or "").startswith(OPERATOR_PREFIX):
                    continue
                lhs = graph.node(e.dst)
                lhs_matches = e.dst == b
                if not lhs_matches and lhs.kind is GraphNodeKind.IDENTIFIER:
                    ref2 = graph.ref_target(lhs.id)
                    lhs_matches = ref2 is not None and ref2.id == b
                if not lhs_matches and lhs.kind is GraphNodeKind.MEMBER_ACCESS:
                    # member write taints the base object's declaration
                    kids = graph.children(lhs.id)
                    if kids and kids[0].kind is GraphNodeKind.IDENTIFIER:
                        ref2 = graph.ref_target(kids[0].id)
                        lhs_matches = ref2 is not None and ref2.id == b
                if not lhs_matches:
                    continue
                value = graph.arguments(assign.id).get(2)
                if value is None:
                    continue
                cur = a
                if cur == value.id:
                    return True
                while cur in parents:
                    cur = parents[cur]
                    if cur == value.id:
                        return True
    return False
