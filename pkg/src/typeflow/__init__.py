"""typeflow: usage slicing, type recovery, and taint queries for an
ECMAScript-style dynamic language.

Pipeline: parse -> build_graph -> propagate -> extract_slices -> infer
(pluggable backend) -> validate against declarations -> re-propagate ->
dataflow queries / evaluation.
"""

from .ast_nodes import AstNode, NodeKind
from .dataflow import TaintFlow, TaintQuery, run_query, typed_coverage_report
from .declarations import (
    DeclarationRegistry,
    DeclFormat,
    TypeDeclaration,
    load_declarations,
    validate,
)
from .errors import (
    BackendUnavailable,
    ConflictError,
    DeclParseError,
    Diagnostic,
    LexiconError,
    MalformedOutput,
    MismatchError,
    ParseError,
    TypeflowError,
)
from .evaluation import (
    GroundTruthEntry,
    MetricsReport,
    ScoreMode,
    TruthCategory,
    evaluate_corpus,
    mask_annotations,
    score,
)
from .graph import (
    Graph,
    GraphEdge,
    GraphEdgeKind,
    GraphNode,
    GraphNodeKind,
    build_graph,
    typed_node_counts,
    typed_node_ratio,
)
from .inference import (
    BackendContract,
    HeuristicBackend,
    InferencePrediction,
    Lexicon,
    RemoteBackend,
    SENTINEL_NO_TYPES,
    TaggedSnippet,
    heuristic_backend,
    infer,
    parse_generation,
    render_tagged,
    strip_tags,
)
from .parser import ParseResult, parse, supported_subset
from .propagation import (
    TypeAssignmentMap,
    TypeHint,
    propagate,
    repropagate_with_inferences,
)
from .slicing import (
    Definition,
    ObservedCall,
    ProgramUsageSlice,
    UsageSlice,
    extract_slices,
    group_program_slices,
    slice_types_with_annotations,
)
from .spans import SourceSpan, span_text

__version__ = "0.1.0"

SCHEMA_VERSIONS = {
    "ast": 1,
    "graph": 1,
    "slices": 1,
    "predictions": 1,
    "report": 1,
    "wire": 1,
}

__all__ = [
    "AstNode",
    "BackendContract",
    "BackendUnavailable",
    "ConflictError",
    "DeclFormat",
    "DeclParseError",
    "DeclarationRegistry",
    "Definition",
    "Diagnostic",
    "Graph",
    "GraphEdge",
    "GraphEdgeKind",
    "GraphNode",
    "GraphNodeKind",
    "GroundTruthEntry",
    "HeuristicBackend",
    "InferencePrediction",
    "Lexicon",
    "LexiconError",
    "MalformedOutput",
    "MetricsReport",
    "MismatchError",
    "NodeKind",
    "ObservedCall",
    "ParseError",
    "ParseResult",
    "ProgramUsageSlice",
    "RemoteBackend",
    "SENTINEL_NO_TYPES",
    "SCHEMA_VERSIONS",
    "ScoreMode",
    "SourceSpan",
    "TaggedSnippet",
    "TaintFlow",
    "TaintQuery",
    "TruthCategory",
    "TypeAssignmentMap",
    "TypeDeclaration",
    "TypeHint",
    "TypeflowError",
    "UsageSlice",
    "build_graph",
    "evaluate_corpus",
    "extract_slices",
    "group_program_slices",
    "heuristic_backend",
    "infer",
    "load_declarations",
    "mask_annotations",
    "parse",
    "parse_generation",
    "propagate",
    "render_tagged",
    "repropagate_with_inferences",
    "run_query",
    "score",
    "slice_types_with_annotations",
    "span_text",
    "strip_tags",
    "supported_subset",
    "typed_coverage_report",
    "typed_node_counts",
    "typed_node_ratio",
    "validate",
]
