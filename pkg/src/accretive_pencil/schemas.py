"""JSON schemas for CLI inputs and reports, validated with ``jsonschema``."""

import jsonschema

__all__ = ["INPUT_SCHEMAS", "REPORT_SCHEMA", "validate_input", "validate_report"]

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_vector = {"type": "array", "items": _complex, "minItems": 1}

OPERATOR = {
    "type": "object",
    "required": ["dim", "entries"],
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "entries": {"type": "array", "items": _vector, "minItems": 1},
    },
}

PENCIL = {
    "type": "object",
    "required": ["B", "C"],
    "properties": {
        "B": OPERATOR,
        "C": OPERATOR,
        "expected": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "theta": {"type": "number"},
    },
}

SEMIGROUP = {
    "type": "object",
    "required": ["T"],
    "properties": {
        "T": OPERATOR,
        "psi": {"type": "number", "minimum": 0},
        "omega": {"type": "number", "minimum": 0},
        "t_samples": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
}

NUMRANGE = {
    "type": "object",
    "required": ["A"],
    "properties": {"A": OPERATOR, "sector": {"type": "number", "minimum": 0}},
}

BVP = {
    "type": "object",
    "required": ["pencil", "u0", "u1"],
    "properties": {
        "pencil": PENCIL,
        "u0": _vector,
        "u1": _vector,
        "f": {
            "type": ["object", "null"],
            "required": ["x", "values"],
            "properties": {
                "x": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "values": {"type": "array", "items": _vector, "minItems": 2},
            },
        },
        "x_grid": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "p": {"type": "number", "exclusiveMinimum": 1},
    },
}

_coef = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["poly", "samples"]},
        "coeffs": {"type": "array", "items": {"type": "number"}},
        "y": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
    },
}

PDE = {
    "type": "object",
    "required": ["p0", "p1"],
    "properties": {
        "p0": _coef,
        "p1": _coef,
        "alpha": {"type": "number"},
        "beta": {"oneOf": [{"type": "number"}, _complex]},
        "r": {"type": "number", "exclusiveMinimum": 0},
        "epsilon": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "n_y": {"type": "integer", "minimum": 3},
        "n_x": {"type": "integer", "minimum": 3},
        "manufactured": {"type": "boolean"},
    },
}

INPUT_SCHEMAS = {
    "check": PENCIL,
    "factorize": PENCIL,
    "numrange": NUMRANGE,
    "semigroup": SEMIGROUP,
    "solve": BVP,
    "pde-example": PDE,
}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "seed", "pass", "results"],
    "properties": {
        "command": {"enum": sorted(INPUT_SCHEMAS)},
        "seed": {"type": "integer"},
        "pass": {"type": "boolean"},
        "input": {"type": ["string", "null"]},
        "results": {"type": "object"},
        "error": {"type": ["string", "null"]},
    },
}


def _path(err):
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate_input(command, obj):
    """Raise ``ValueError`` naming the offending field if ``obj`` is invalid."""
    try:
        jsonschema.validate(obj, INPUT_SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ValueError(f"field {_path(exc)}: {exc.message}") from exc


def validate_report(obj):
    jsonschema.validate(obj, REPORT_SCHEMA)
