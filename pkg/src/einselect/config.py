"""JSON schemas for the CLI run configurations."""

from __future__ import annotations

from typing import Any

import jsonschema

from .content import KNOWN_LABELS

NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
PAIR = {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}
COUNT = {"type": "integer", "minimum": 1}

RANDOM_ENV = {
    "type": "object",
    "required": ["n", "seed"],
    "properties": {
        "n": COUNT,
        "seed": {"type": "integer", "minimum": 0},
        "g_range": PAIR,
        "states": {"enum": ["haar", "equatorial"]},
    },
    "additionalProperties": False,
}

QUBIT = {
    "type": "object",
    "required": ["alpha", "beta", "g"],
    "properties": {"alpha": PAIR, "beta": PAIR, "g": NUM},
    "additionalProperties": False,
}

ENV = {
    "type": "object",
    "oneOf": [
        {"required": ["qubits"], "properties": {"qubits": {"type": "array", "items": QUBIT, "minItems": 1}}},
        {"required": ["random_env"], "properties": {"random_env": RANDOM_ENV}},
    ],
}

MODEL = {
    "type": "object",
    "required": ["system"],
    "properties": {
        "system": {
            "type": "object",
            "required": ["a", "b"],
            "properties": {"a": PAIR, "b": PAIR},
            "additionalProperties": False,
        },
        "env": ENV,
        "random_env": RANDOM_ENV,
    },
    "oneOf": [{"required": ["env"]}, {"required": ["random_env"]}],
}

LINSPACE = {
    "type": "object",
    "required": ["start", "stop", "num"],
    "properties": {"start": NUM, "stop": NUM, "num": COUNT},
    "additionalProperties": False,
}

GRID_SPEC = {"oneOf": [LINSPACE, {"type": "array", "items": NUM, "minItems": 1}]}

SIMULATE = {
    "type": "object",
    "required": ["model", "times"],
    "properties": {
        "model": MODEL,
        "times": GRID_SPEC,
        "snapshots": {"type": "array", "items": NUM},
        "oracle": {"type": "boolean"},
    },
    "additionalProperties": False,
}

ANALYZE = {
    "type": "object",
    "properties": {
        "model": MODEL,
        "gaussian": {
            "type": "object",
            "properties": {"fit_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
            "additionalProperties": False,
        },
        "average": {
            "type": "object",
            "required": ["horizon"],
            "properties": {"horizon": POS, "samples": {"type": "integer", "minimum": 1000}},
            "additionalProperties": False,
        },
        "recurrence": {
            "type": "object",
            "required": ["threshold", "horizon", "step"],
            "properties": {
                "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "horizon": POS,
                "step": POS,
            },
            "additionalProperties": False,
        },
        "scaling": {
            "type": "object",
            "required": ["n_list", "seeds"],
            "properties": {
                "n_list": {"type": "array", "items": COUNT, "minItems": 1},
                "seeds": {"type": "integer", "minimum": 10},
                "horizon": POS,
                "samples": {"type": "integer", "minimum": 1000},
                "g_range": PAIR,
                "states": {"enum": ["haar", "equatorial"]},
                "base_seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
    "anyOf": [
        {"required": ["scaling"]},
        {"required": ["model"]},
    ],
    "dependentRequired": {"gaussian": ["model"], "average": ["model"], "recurrence": ["model"]},
}

_SCORING = {
    "t": NUM,
    "window": POS,
    "lags": {"type": "integer", "minimum": 2},
}

CONTENT = {
    "type": "object",
    "required": ["model", "t", "window"],
    "properties": {
        "model": MODEL,
        **_SCORING,
        "psi": LINSPACE,
        "chi": NUM,
    },
    "additionalProperties": False,
}

CLAIM = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["identity", "spin"]},
        "psi": {"type": "number", "minimum": 0},
        "chi": NUM,
        "values": {"type": "array", "items": {"enum": ["+", "-"]}, "minItems": 1, "uniqueItems": True},
        "label": {"enum": list(KNOWN_LABELS)},
    },
    "additionalProperties": False,
    "anyOf": [{"required": ["kind"]}, {"required": ["label"]}],
}

CLAIMS_FILE = {
    "oneOf": [
        {"type": "array", "items": CLAIM},
        {"type": "object", "required": ["claims"], "properties": {"claims": {"type": "array", "items": CLAIM}}},
    ]
}

GATE = {
    "type": "object",
    "required": ["model", "t", "window", "claims"],
    "properties": {
        "model": MODEL,
        **_SCORING,
        "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "claims": {"oneOf": [{"type": "string"}, {"type": "array", "items": CLAIM}]},
    },
    "additionalProperties": False,
}

GRATING = {
    "type": "object",
    "required": ["period", "open_fraction", "slit_count"],
    "properties": {
        "period": POS,
        "open_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "slit_count": COUNT,
        "offset": NUM,
    },
    "additionalProperties": False,
}

KERNEL = {
    "oneOf": [
        {"type": "null"},
        {
            "type": "object",
            "required": ["form", "l_c"],
            "properties": {"form": {"const": "gaussian"}, "l_c": {"oneOf": [POS, {"const": "inf"}]}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["form", "s", "eta"],
            "properties": {
                "form": {"const": "tabulated"},
                "s": {"type": "array", "items": NUM, "minItems": 2},
                "eta": {"type": "array", "items": {"oneOf": [NUM, PAIR]}, "minItems": 2},
            },
            "additionalProperties": False,
        },
    ]
}

FRINGE = {
    "type": "object",
    "properties": {
        "setup": {
            "type": "object",
            "properties": {
                "period": POS,
                "open_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "slit_count": COUNT,
                "points_per_period": {"type": "integer", "minimum": 4},
                "grid_periods": COUNT,
                "wavelength": POS,
                "talbot_multiple": POS,
                "source_coherence": POS,
                "window_periods": COUNT,
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "required": ["x_min", "x_max", "n"],
            "properties": {"x_min": NUM, "x_max": NUM, "n": {"type": "integer", "minimum": 16}},
            "additionalProperties": False,
        },
        "gratings": {"type": "array", "items": GRATING, "minItems": 1},
        "distances": {"type": "array", "items": NUM, "minItems": 1},
        "wavelength": POS,
        "source_coherence": POS,
        "mask": GRATING,
        "window": PAIR,
        "kernel": KERNEL,
        "kernel_before": {"type": "integer", "minimum": 0},
        "decohere_at_mask": {"type": "boolean"},
        "offsets": {"type": "integer", "minimum": 2},
        "claims": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "interval": PAIR,
                    "slits": {"enum": ["exclusive", "inclusive"]},
                    "total": {"const": True},
                    "label": {"type": "string"},
                },
                "additionalProperties": False,
                "oneOf": [{"required": ["interval"]}, {"required": ["slits"]}, {"required": ["total"]}],
            },
        },
        "policy": {
            "type": "object",
            "properties": {"kappa": POS, "license_inclusive_union": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
    "dependentRequired": {
        "gratings": ["grid", "distances", "wavelength"],
        "grid": ["gratings"],
    },
}

TEMP = {
    "type": "object",
    "required": ["table", "energies"],
    "properties": {
        "table": {"type": "string"},
        "energies": {"type": "array", "items": NUM, "minItems": 1},
    },
    "additionalProperties": False,
}

SCHEMAS = {
    "simulate": SIMULATE,
    "analyze": ANALYZE,
    "content": CONTENT,
    "gate": GATE,
    "fringe": FRINGE,
    "temp": TEMP,
}


class ConfigError(ValueError):
    """Schema violation; ``path`` is a JSON path to the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


def _json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def validate(doc: Any, schema: dict, root: str = "$") -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = _json_path(err.absolute_path)
        if root != "$":
            path = root + path[1:]
        raise ConfigError(path, err.message)
