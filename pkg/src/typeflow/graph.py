"""Lightweight code property graph.

The graph layers scope/reference, capture, and intra-file call edges over a
flattened syntax view.  Control structure is dissolved: statements inside
``if`` branches and blocks appear in source order under their method, and
assignments (including declarator initializers) become ``<operator>.*``
pseudo-call nodes with ARGUMENT edges (1 = target, 2 = value).  This keeps
the node-kind set small while leaving enough structure for slicing, type
propagation, and taint queries to replay from a serialized graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .ast_nodes import AstNode, NodeKind, literal_tag
from .errors import Diagnostic
from .spans import SourceSpan
from .typenames import ANY

ASSIGN_OPERATOR_NAMES = {
    "=": "<operator>.assignment",
    "+=": "<operator>.assignmentPlus",
    "-=": "<operator>.assignmentMinus",
    "*=": "<operator>.assignmentMultiplication",
    "/=": "<operator>.assignmentDivision",
    "%=": "<operator>.assignmentModulo",
}

OPERATOR_PREFIX = "<operator>."


class GraphNodeKind(str, Enum):
    FILE = "File"
    METHOD = "Method"
    PARAMETER = "Parameter"
    LOCAL = "Local"
    IDENTIFIER = "Identifier"
    LITERAL = "Literal"
    CALL = "Call"
    MEMBER_ACCESS = "MemberAccess"
    RETURN = "Return"
    METHOD_REF = "MethodRef"


class GraphEdgeKind(str, Enum):
    AST = "AST"
    REF = "REF"
    CALL = "CALL"
    CAPTURE = "CAPTURE"
    ARGUMENT = "ARGUMENT"
    # Reserved for type-stub linkage; the current builder stores types in
    # type_full_name and emits no edges of this kind.
    EVAL_TYPE = "EVAL_TYPE"


# Node kinds that count toward the typed-node ratio.
COUNTED_KINDS = frozenset(
    {
        GraphNodeKind.PARAMETER,
        GraphNodeKind.LOCAL,
        GraphNodeKind.CALL,
        GraphNodeKind.LITERAL,
        GraphNodeKind.IDENTIFIER,
    }
)


@dataclass
class GraphNode:
    id: int
    kind: GraphNodeKind
    span: SourceSpan
    name: str | None = None
    full_name: str | None = None
    type_full_name: str = ANY
    order: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "name": self.name,
            "fullName": self.full_name,
            "typeFullName": self.type_full_name,
            "span": self.span.to_json(),
            "order": self.order,
        }


@dataclass(frozen=True)
class GraphEdge:
    kind: GraphEdgeKind
    src: int
    dst: int
    index: int | None = None  # ARGUMENT index; 0 is the receiver

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "src": self.src, "dst": self.dst}
        if self.index is not None:
            out["index"] = self.index
        return out


@dataclass
class Graph:
    file_id: str
    source: str
    nodes: list[GraphNode] = field(default_factory=list)
    edges: list[GraphEdge] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    # Annotated declaration text survives here so later passes can honor
    # annotation priority without reparsing.
    annotations: dict[int, str] = field(default_factory=dict)

    # -- indexes (rebuilt lazily) -------------------------------------

    def __post_init__(self):
        self._index()

    def _index(self):
        self._by_id = {n.id: n for n in self.nodes}
        self._ast_children: dict[int, list[int]] = {}
        self._ref: dict[int, int] = {}
        self._args: dict[int, dict[int, int]] = {}
        self._captures: dict[int, list[int]] = {}
        self._calls: dict[int, int] = {}
        for e in self.edges:
            if e.kind is GraphEdgeKind.AST:
                self._ast_children.setdefault(e.src, []).append(e.dst)
            elif e.kind is GraphEdgeKind.REF:
                self._ref[e.src] = e.dst
            elif e.kind is GraphEdgeKind.ARGUMENT:
                self._args.setdefault(e.src, {})[e.index or 0] = e.dst
            elif e.kind is GraphEdgeKind.CAPTURE:
                self._captures.setdefault(e.src, []).append(e.dst)
            elif e.kind is GraphEdgeKind.CALL:
                self._calls[e.src] = e.dst
        for children in self._ast_children.values():
            children.sort(key=lambda i: self._by_id[i].order)

    def node(self, node_id: int) -> GraphNode:
        return self._by_id[node_id]

    def children(self, node_id: int) -> list[GraphNode]:
        return [self._by_id[i] for i in self._ast_children.get(node_id, [])]

    def ref_target(self, ident_id: int) -> GraphNode | None:
        t = self._ref.get(ident_id)
        return self._by_id[t] if t is not None else None

    def arguments(self, call_id: int) -> dict[int, GraphNode]:
        return {k: self._by_id[v] for k, v in self._args.get(call_id, {}).items()}

    def call_target(self, call_id: int) -> GraphNode | None:
        t = self._calls.get(call_id)
        return self._by_id[t] if t is not None else None

    def captured_decls(self, method_id: int) -> list[GraphNode]:
        return [self._by_id[i] for i in self._captures.get(method_id, [])]

    def methods(self) -> list[GraphNode]:
        return [n for n in self.nodes if n.kind is GraphNodeKind.METHOD]

    def method_by_full_name(self, full_name: str) -> GraphNode | None:
        for n in self.nodes:
            if n.kind is GraphNodeKind.METHOD and n.full_name == full_name:
                return n
        return None

    def body_statements(self, method_id: int) -> list[GraphNode]:
        return [
            n
            for n in self.children(method_id)
            if n.kind not in (GraphNodeKind.PARAMETER, GraphNodeKind.METHOD)
        ]

    def parameters(self, method_id: int) -> list[GraphNode]:
        return [
            n for n in self.children(method_id) if n.kind is GraphNodeKind.PARAMETER
        ]

    def owning_method(self, node_id: int) -> GraphNode | None:
        parents = {}
        for e in self.edges:
            if e.kind is GraphEdgeKind.AST:
                parents[e.dst] = e.src
        cur = node_id
        while cur in parents:
            cur = parents[cur]
            n = self._by_id[cur]
            if n.kind is GraphNodeKind.METHOD:
                return n
        return None

    def copy(self) -> "Graph":
        nodes = [
            GraphNode(
                n.id, n.kind, n.span, n.name, n.full_name, n.type_full_name, n.order
            )
            for n in self.nodes
        ]
        return Graph(
            self.file_id,
            self.source,
            nodes,
            list(self.edges),
            list(self.diagnostics),
            dict(self.annotations),
        )

    # -- canonical serialization --------------------------------------

    def to_json(self) -> dict:
        order = sorted(
            self.nodes,
            key=lambda n: (n.span.sort_key(), n.kind.value, n.name or "", n.order),
        )
        remap = {n.id: i for i, n in enumerate(order)}
        nodes = []
        for n in order:
            obj = n.to_json()
            obj["id"] = remap[n.id]
            nodes.append(obj)
        edges = sorted(
            (
                {
                    **e.to_json(),
                    "src": remap[e.src],
                    "dst": remap[e.dst],
                }
                for e in self.edges
            ),
            key=lambda e: (e["kind"], e["src"], e["dst"], e.get("index", -1)),
        )
        return {
            "schemaVersion": 1,
            "file": self.file_id,
            "nodes": nodes,
            "edges": edges,
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "annotations": {str(remap[k]): v for k, v in self.annotations.items()},
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @staticmethod
    def from_json(obj: dict, source: str = "") -> "Graph":
        file_id = obj["file"]
        nodes = [
            GraphNode(
                id=n["id"],
                kind=GraphNodeKind(n["kind"]),
                span=SourceSpan.from_json(n["span"], file_id),
                name=n["name"],
                full_name=n["fullName"],
                type_full_name=n["typeFullName"],
                order=n["order"],
            )
            for n in obj["nodes"]
        ]
        edges = [
            GraphEdge(
                kind=GraphEdgeKind(e["kind"]),
                src=e["src"],
                dst=e["dst"],
                index=e.get("index"),
            )
            for e in obj["edges"]
        ]
        diags = [
            Diagnostic(d["message"], SourceSpan.from_json(d["span"], file_id))
            for d in obj.get("diagnostics", [])
        ]
        annotations = {int(k): v for k, v in obj.get("annotations", {}).items()}
        return Graph(file_id, source, nodes, edges, diags, annotations)


def _counted(graph: Graph) -> list[GraphNode]:
    # Operator pseudo-calls encode assignments; they are not program calls
    # and stay out of the ratio so the denominator tracks real code entities.
    return [
        n
        for n in graph.nodes
        if n.kind in COUNTED_KINDS
        and not (n.kind is GraphNodeKind.CALL and (n.name or "").startswith(OPERATOR_PREFIX))
    ]


def typed_node_ratio(graph: Graph) -> float:
    """Share of countable nodes (Parameter, Local, Call, Literal, Identifier)
    carrying a non-ANY type."""
    counted = _counted(graph)
    if not counted:
        return 0.0
    typed = sum(1 for n in counted if n.type_full_name != ANY)
    return typed / len(counted)


def typed_node_counts(graph: Graph) -> tuple[int, int]:
    counted = _counted(graph)
    typed = sum(1 for n in counted if n.type_full_name != ANY)
    return typed, len(counted)


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------


class _Scope:
    def __init__(self, kind: str, method_id: int, parent: "_Scope | None"):
        self.kind = kind  # program | function | block
        self.method_id = method_id
        self.parent = parent
        self.decls: dict[str, int] = {}

    def function_scope(self) -> "_Scope":
        s = self
        while s.kind == "block":
            assert s.parent is not None
            s = s.parent
        return s

    def resolve(self, name: str) -> int | None:
        s: _Scope | None = self
        while s is not None:
            if name in s.decls:
                return s.decls[name]
            s = s.parent
        return None


class _Builder:
    def __init__(self, ast: AstNode, file_id: str, source: str):
        self.ast = ast
        self.file_id = file_id
        self.source = source
        self.nodes: list[GraphNode] = []
        self.edges: list[GraphEdge] = []
        self.diagnostics: list[Diagnostic] = []
        self.annotations: dict[int, str] = {}
        self.next_id = 0
        self.anon_counter = 0
        self.method_order = 0
        self.full_names: set[str] = set()
        self.decl_method: dict[int, int] = {}  # decl node -> owning method node
        self.binding_method: dict[int, int] = {}  # decl node -> bound Method node
        self.attached_decls: set[int] = set()
        self.pending_calls: list[tuple[int, int]] = []  # (call node, decl node)
        self.capture_pairs: set[tuple[int, int]] = set()

    def _new_node(self, kind: GraphNodeKind, span: SourceSpan, **kw) -> GraphNode:
        node = GraphNode(self.next_id, kind, span, **kw)
        self.next_id += 1
        self.nodes.append(node)
        return node

    def _edge(self, kind: GraphEdgeKind, src: int, dst: int, index: int | None = None):
        self.edges.append(GraphEdge(kind, src, dst, index))

    def _ast_edge(self, parent: GraphNode, child: GraphNode, order: int):
        child.order = order
        self._edge(GraphEdgeKind.AST, parent.id, child.id)

    def _declare(self, scope: _Scope, name: str, node: GraphNode):
        scope.decls[name] = node.id
        self.decl_method[node.id] = scope.method_id

    @staticmethod
    def _name_span(node: AstNode) -> SourceSpan:
        if node.name_span is not None:
            return node.name_span
        s = node.span
        width = len(node.name or "")
        return SourceSpan(
            s.file_id,
            s.start_line,
            s.start_col,
            s.start_line,
            s.start_col + width,
            s.start_offset,
            s.start_offset + width,
        )

    def build(self) -> Graph:
        file_node = self._new_node(
            GraphNodeKind.FILE,
            self.ast.span,
            name=self.file_id,
            full_name=self.file_id,
        )
        self.file_node = file_node
        outer = _Scope("program", -1, None)
        self._build_method(
            name="program",
            full_name=f"{self.file_id}::program",
            params=[],
            body_stmts=self.ast.children,
            span=self.ast.span,
            parent_scope=outer,
        )
        for call_id, decl_id in self.pending_calls:
            method_id = self.binding_method.get(decl_id)
            if method_id is not None:
                self._edge(GraphEdgeKind.CALL, call_id, method_id)
        for method_id, decl_id in sorted(self.capture_pairs):
            self._edge(GraphEdgeKind.CAPTURE, method_id, decl_id)
        return Graph(
            self.file_id,
            self.source,
            self.nodes,
            self.edges,
            self.diagnostics,
            self.annotations,
        )

    def _unique_full_name(self, base: str) -> str:
        name = base
        n = 0
        while name in self.full_names:
            n += 1
            name = f"{base}${n}"
        self.full_names.add(name)
        return name

    def _build_method(
        self,
        name: str,
        full_name: str,
        params: list[AstNode],
        body_stmts: list[AstNode],
        span: SourceSpan,
        parent_scope: _Scope,
    ) -> GraphNode:
        full_name = self._unique_full_name(full_name)
        method = self._new_node(
            GraphNodeKind.METHOD, span, name=name, full_name=full_name
        )
        self._ast_edge(self.file_node, method, self.method_order)
        self.method_order += 1
        scope = _Scope("function", method.id, parent_scope)
        order = 0
        for p in params:
            pnode = self._new_node(
                GraphNodeKind.PARAMETER,
                self._name_span(p),
                name=p.name,
                type_full_name=p.annotation or ANY,
            )
            if p.annotation:
                self.annotations[pnode.id] = p.annotation
            self._ast_edge(method, pnode, order)
            order += 1
            self._declare(scope, p.name or "", pnode)
        self._hoist_functions(body_stmts, scope)
        for stmt in body_stmts:
            order = self._statement(method, stmt, scope, order)
        return method

    def _hoist_functions(self, stmts: list[AstNode], scope: _Scope):
        for stmt in stmts:
            if stmt.kind is NodeKind.FUNCTION_DECL and stmt.name:
                if stmt.name in scope.decls:
                    continue
                local = self._new_node(
                    GraphNodeKind.LOCAL, self._name_span(stmt), name=stmt.name
                )
                self._declare(scope, stmt.name, local)

    # -- statements -----------------------------------------------------

    def _statement(
        self, method: GraphNode, stmt: AstNode, scope: _Scope, order: int
    ) -> int:
        kind = stmt.kind
        if kind is NodeKind.VAR_DECL:
            return self._var_decl(method, stmt, scope, order)
        if kind is NodeKind.FUNCTION_DECL:
            return self._function_stmt(method, stmt, scope, order)
        if kind is NodeKind.RETURN:
            ret = self._new_node(GraphNodeKind.RETURN, stmt.span)
            self._ast_edge(method, ret, order)
            if stmt.children:
                child = self._expression(stmt.children[0], scope)
                if child is not None:
                    self._ast_edge(ret, child, 0)
            return order + 1
        if kind is NodeKind.IF:
            cond = self._expression(stmt.children[0], scope)
            if cond is not None:
                self._ast_edge(method, cond, order)
                order += 1
            for branch in stmt.children[1:]:
                order = self._branch(method, branch, scope, order)
            return order
        if kind is NodeKind.BLOCK:
            return self._branch(method, stmt, scope, order)
        if kind is NodeKind.IMPORT:
            for binding in stmt.children:
                local = self._new_node(
                    GraphNodeKind.LOCAL, binding.span, name=binding.name
                )
                self._ast_edge(method, local, order)
                order += 1
                self._declare(scope.function_scope(), binding.name or "", local)
            return order
        node = self._expression(stmt, scope)
        if node is not None:
            self._ast_edge(method, node, order)
            order += 1
        return order

    def _branch(
        self, method: GraphNode, branch: AstNode, scope: _Scope, order: int
    ) -> int:
        if branch.kind is NodeKind.BLOCK:
            inner = _Scope("block", scope.method_id, scope)
            self._hoist_functions(branch.children, inner)
            for stmt in branch.children:
                order = self._statement(method, stmt, inner, order)
            return order
        return self._statement(method, branch, scope, order)

    def _var_decl(
        self, method: GraphNode, stmt: AstNode, scope: _Scope, order: int
    ) -> int:
        target_scope = (
            scope if stmt.decl_kind in ("let", "const") else scope.function_scope()
        )
        init = next(
            (c for c in stmt.children if c.kind is not NodeKind.TYPE_ANNOTATION), None
        )
        if stmt.name in target_scope.decls:
            # Redeclaration in the same scope behaves like a reassignment.
            if init is None:
                return order
            ident = self._new_node(
                GraphNodeKind.IDENTIFIER, self._name_span(stmt), name=stmt.name
            )
            self._resolve_identifier(ident, stmt.name or "", scope)
            value = self._expression(init, scope)
            assign = self._new_node(
                GraphNodeKind.CALL, stmt.span, name=ASSIGN_OPERATOR_NAMES["="]
            )
            self._ast_edge(method, assign, order)
            self._ast_edge(assign, ident, 0)
            self._edge(GraphEdgeKind.ARGUMENT, assign.id, ident.id, 1)
            if value is not None:
                self._ast_edge(assign, value, 1)
                self._edge(GraphEdgeKind.ARGUMENT, assign.id, value.id, 2)
            return order + 1
        value = self._expression(init, scope) if init is not None else None
        local = self._new_node(
            GraphNodeKind.LOCAL,
            self._name_span(stmt),
            name=stmt.name,
            type_full_name=stmt.annotation or ANY,
        )
        if stmt.annotation:
            self.annotations[local.id] = stmt.annotation
        self._declare(target_scope, stmt.name or "", local)
        if init is None:
            self._ast_edge(method, local, order)
            return order + 1
        if value is not None and value.kind is GraphNodeKind.METHOD_REF:
            target = next(
                (
                    n
                    for n in self.nodes
                    if n.kind is GraphNodeKind.METHOD
                    and n.full_name == value.full_name
                ),
                None,
            )
            if target is not None:
                self.binding_method[local.id] = target.id
        assign = self._new_node(
            GraphNodeKind.CALL, stmt.span, name=ASSIGN_OPERATOR_NAMES["="]
        )
        self._ast_edge(method, assign, order)
        self._ast_edge(assign, local, 0)
        self._edge(GraphEdgeKind.ARGUMENT, assign.id, local.id, 1)
        if value is not None:
            self._ast_edge(assign, value, 1)
            self._edge(GraphEdgeKind.ARGUMENT, assign.id, value.id, 2)
        return order + 1

    def _function_stmt(
        self, method: GraphNode, stmt: AstNode, scope: _Scope, order: int
    ) -> int:
        name = stmt.name or self._next_anon()
        parent = self.nodes[scope.function_scope().method_id]
        params = [c for c in stmt.children if c.kind is NodeKind.PARAM]
        body = stmt.children[-1]
        child = self._build_method(
            name=name,
            full_name=f"{parent.full_name}:{name}",
            params=params,
            body_stmts=body.children,
            span=stmt.span,
            parent_scope=scope,
        )
        if stmt.annotation:
            self.annotations[child.id] = stmt.annotation
            child.type_full_name = stmt.annotation
        if stmt.name:
            decl_id = scope.resolve(stmt.name)
            if decl_id is not None:
                self.binding_method.setdefault(decl_id, child.id)
                if decl_id not in self.attached_decls:
                    self.attached_decls.add(decl_id)
                    local = self.nodes[decl_id]
                    self._ast_edge(method, local, order)
                    order += 1
        return order

    def _next_anon(self) -> str:
        name = f"anon{self.anon_counter}"
        self.anon_counter += 1
        return name

    # -- expressions ------------------------------------------------------

    def _resolve_identifier(self, node: GraphNode, name: str, scope: _Scope):
        if name == "this":
            # `this` is a special form with no declaration; exempt from the
            # REF-or-diagnostic rule.
            return
        decl_id = scope.resolve(name)
        if decl_id is None:
            self.diagnostics.append(
                Diagnostic(f"unresolved identifier: {name}", node.span)
            )
            return
        self._edge(GraphEdgeKind.REF, node.id, decl_id)
        decl_method = self.decl_method.get(decl_id)
        if decl_method is not None and decl_method != scope.method_id:
            self.capture_pairs.add((scope.method_id, decl_id))

    def _expression(self, expr: AstNode, scope: _Scope) -> GraphNode | None:
        kind = expr.kind
        if kind is NodeKind.IDENTIFIER:
            node = self._new_node(GraphNodeKind.IDENTIFIER, expr.span, name=expr.name)
            self._resolve_identifier(node, expr.name or "", scope)
            return node
        if expr.is_literal():
            tag = literal_tag(expr)
            node = self._new_node(GraphNodeKind.LITERAL, expr.span, name=tag)
            for i, child in enumerate(expr.children):
                sub = self._expression(child, scope)
                if sub is not None:
                    self._ast_edge(node, sub, i)
            return node
        if expr.is_function():
            name = expr.name or self._next_anon()
            parent = self.nodes[scope.function_scope().method_id]
            params = [c for c in expr.children if c.kind is NodeKind.PARAM]
            body = expr.children[-1]
            child = self._build_method(
                name=name,
                full_name=f"{parent.full_name}:{name}",
                params=params,
                body_stmts=body.children,
                span=expr.span,
                parent_scope=scope,
            )
            if expr.annotation:
                self.annotations[child.id] = expr.annotation
                child.type_full_name = expr.annotation
            return self._new_node(
                GraphNodeKind.METHOD_REF,
                expr.span,
                name=name,
                full_name=child.full_name,
            )
        if kind is NodeKind.MEMBER_ACCESS:
            base = self._expression(expr.children[0], scope)
            node = self._new_node(GraphNodeKind.MEMBER_ACCESS, expr.span, name=expr.name)
            if base is not None:
                self._ast_edge(node, base, 0)
            if len(expr.children) > 1:  # computed access
                index = self._expression(expr.children[1], scope)
                if index is not None:
                    self._ast_edge(node, index, 1)
            return node
        if kind in (NodeKind.CALL, NodeKind.NEW):
            return self._call(expr, scope)
        if kind is NodeKind.ASSIGNMENT:
            lhs, rhs = expr.children
            lhs_node = self._expression(lhs, scope)
            value = self._expression(rhs, scope)
            assign = self._new_node(
                GraphNodeKind.CALL,
                expr.span,
                name=ASSIGN_OPERATOR_NAMES[expr.operator or "="],
            )
            if lhs_node is not None:
                self._ast_edge(assign, lhs_node, 0)
                self._edge(GraphEdgeKind.ARGUMENT, assign.id, lhs_node.id, 1)
            if value is not None:
                self._ast_edge(assign, value, 1)
                self._edge(GraphEdgeKind.ARGUMENT, assign.id, value.id, 2)
            return assign
        return None

    def _call(self, expr: AstNode, scope: _Scope) -> GraphNode:
        callee = expr.children[0]
        args = expr.children[1:]
        is_new = expr.kind is NodeKind.NEW
        receiver: GraphNode | None = None
        callee_node: GraphNode | None = None
        if is_new:
            callee_node = self._expression(callee, scope)
            call_name = f"new {expr.name}"
        elif callee.kind is NodeKind.MEMBER_ACCESS and callee.name:
            receiver = self._expression(callee.children[0], scope)
            call_name = callee.name
        else:
            callee_node = self._expression(callee, scope)
            call_name = expr.name or "<anonymous>"
        call = self._new_node(GraphNodeKind.CALL, expr.span, name=call_name)
        order = 0
        if callee_node is not None:
            self._ast_edge(call, callee_node, order)
            order += 1
        if receiver is not None:
            self._ast_edge(call, receiver, order)
            order += 1
            self._edge(GraphEdgeKind.ARGUMENT, call.id, receiver.id, 0)
        for i, arg in enumerate(args):
            node = self._expression(arg, scope)
            if node is not None:
                self._ast_edge(call, node, order)
                order += 1
                self._edge(GraphEdgeKind.ARGUMENT, call.id, node.id, i + 1)
        if not is_new and callee.kind is NodeKind.IDENTIFIER:
            decl_id = scope.resolve(callee.name or "")
            if decl_id is not None:
                self.pending_calls.append((call.id, decl_id))
        return call


def build_graph(ast: AstNode, file_id: str = "<mem>", source: str = "") -> Graph:
    """Build the code property graph for one parsed file."""
    if ast.kind is not NodeKind.PROGRAM:
        raise ValueError("build_graph expects a Program node")
    return _Builder(ast, file_id, source).build()
