"""Canonical type-name sentinels and the builtin type list.

Two vocabularies coexist deliberately: the propagation pass writes
canonical sentinel spellings (``ANY``, ``NULL``, ``__ecma.String`` ...),
while inference backends answer in the open model vocabulary (``string``,
``Array``, ``NextApiRequest`` ...) which is stored verbatim.  The
``normalize`` helper bridges the two for drop-set filtering.
"""

from __future__ import annotations

from importlib import resources

ANY = "ANY"
NULLISH = "NULL"
INTEGER = "__ecma.Integer"
NUMBER = "__ecma.Number"
BOOLEAN = "__ecma.Boolean"
STRING = "__ecma.String"
OBJECT = "__ecma.Object"
ARRAY = "__ecma.Array"
FUNCTION = "__ecma.Function"

SENTINELS = frozenset(
    {ANY, NULLISH, INTEGER, NUMBER, BOOLEAN, STRING, OBJECT, ARRAY, FUNCTION}
)

# Literal shape tag -> canonical type used by the propagation pass.
LITERAL_TYPES = {
    "string": STRING,
    "integer": INTEGER,
    "number": NUMBER,
    "boolean": BOOLEAN,
    "null": NULLISH,
    "undefined": NULLISH,
    "object": OBJECT,
    "array": ARRAY,
    "function": FUNCTION,
}

# Literal shape tag -> name in the model vocabulary, used by backends.
LITERAL_MODEL_TYPES = {
    "string": "string",
    "integer": "number",
    "number": "number",
    "boolean": "boolean",
    "null": "null",
    "undefined": "null",
    "object": "Object",
    "array": "Array",
    "function": "Function",
}

# Predictions of these (normalized) names carry no useful information.
DEFAULT_DROP_SET = frozenset({"any", "object", "unk", "void", "null", "undefined"})


def normalize(type_name: str) -> str:
    """Lower-cased final segment, e.g. ``__ecma.Object`` -> ``object``."""
    return type_name.rsplit(".", 1)[-1].strip().lower()


def is_unhelpful(type_name: str, drop_set: frozenset[str] = DEFAULT_DROP_SET) -> bool:
    return normalize(type_name) in drop_set


def load_top100(path: str | None = None) -> list[str]:
    """The builtin-type frequency list; one name per line, # comments."""
    if path is None:
        text = resources.files("typeflow.data").joinpath("top100_types.txt").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    names = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            names.append(line)
    return names
