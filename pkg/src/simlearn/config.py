"""Run-configuration loading and schema validation.

One JSON document drives every CLI workflow. All blocks are optional at the
schema level; each subcommand states which blocks it needs. Unknown keys are
rejected everywhere so typos fail loudly before any work starts.
"""

import json
import os

import jsonschema

from .exceptions import ConfigError

_LAYER = {
    "type": "object",
    "properties": {
        "kind": {
            "enum": [
                "dense", "conv2d", "upsample2", "relu", "tanh",
                "binarize_ste", "flatten", "reshape",
            ]
        },
        "in_dim": {"type": "integer", "minimum": 1},
        "out_dim": {"type": "integer", "minimum": 1},
        "in_channels": {"type": "integer", "minimum": 1},
        "filters": {"type": "integer", "minimum": 1},
        "kernel": {"type": "integer", "minimum": 1},
        "stride": {"type": "integer", "minimum": 1},
        "padding": {"enum": ["same", "valid"]},
        "channels": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "width": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_ARCHITECTURE = {"type": "array", "items": _LAYER, "minItems": 1}

_METRIC_PARAMS = {
    "type": "object",
    "properties": {
        "window_size": {"type": "integer", "minimum": 3},
        "k1": {"type": "number", "exclusiveMinimum": 0},
        "k2": {"type": "number", "exclusiveMinimum": 0},
        "dynamic_range": {"type": "number", "exclusiveMinimum": 0},
        "scales": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number"},
        "betas": {"type": "array", "items": {"type": "number"}},
        "gammas": {"type": "array", "items": {"type": "number"}},
    },
    "additionalProperties": False,
}

_SOURCE = {
    "type": "object",
    "oneOf": [
        {
            "properties": {"kind": {"const": "dir"}, "path": {"type": "string"}},
            "required": ["kind", "path"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "csv"}, "path": {"type": "string"}},
            "required": ["kind", "path"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "checkpoint"},
                "path": {"type": "string"},
                "n_samples": {"type": "integer", "minimum": 2},
            },
            "required": ["kind", "path"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "gaussian"},
                "n": {"type": "integer", "minimum": 2},
                "dim": {"type": "integer", "minimum": 1},
                "shift": {"type": "number"},
                "seed": {"type": "integer", "minimum": 0},
            },
            "required": ["kind", "n", "dim"],
            "additionalProperties": False,
        },
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "model": {"enum": ["autoencoder", "elvae"]},
        "architecture": _ARCHITECTURE,
        "encoder": _ARCHITECTURE,
        "decoder": _ARCHITECTURE,
        "init": {"enum": ["fan-in", "gaussian"]},
        "gaussian_std": {"type": "number", "minimum": 0},
        "loss": {
            "type": "object",
            "properties": {
                "name": {"enum": ["mse", "mae", "ssim", "ms-ssim"]},
                "params": _METRIC_PARAMS,
                "normalize_scale": {"type": "boolean"},
                "scale_pairs": {"type": "integer", "minimum": 1},
            },
            "required": ["name"],
            "additionalProperties": False,
        },
        "optimizer": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["sgd", "adam"]},
                "lr": {"type": "number", "exclusiveMinimum": 0},
                "momentum": {"type": "number", "minimum": 0},
                "weight_decay": {"type": "number", "minimum": 0},
                "beta1": {"type": "number", "minimum": 0},
                "beta2": {"type": "number", "minimum": 0},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "batch_size": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "early_stop": {
            "type": "object",
            "properties": {
                "patience": {"type": "integer", "minimum": 0},
                "max_epochs": {"type": "integer", "minimum": 1},
                "min_delta": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "dataset": {
            "type": "object",
            "oneOf": [
                {
                    "properties": {
                        "kind": {"const": "toy"},
                        "n": {"type": "integer", "minimum": 2},
                        "size": {"type": "integer", "minimum": 4},
                        "seed": {"type": "integer", "minimum": 0},
                        "valid_fraction": {
                            "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                        },
                    },
                    "required": ["kind", "n"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "kind": {"const": "edges"},
                        "n": {"type": "integer", "minimum": 2},
                        "size": {"type": "integer", "minimum": 4},
                        "seed": {"type": "integer", "minimum": 0},
                        "valid_fraction": {
                            "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                        },
                    },
                    "required": ["kind", "n"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "kind": {"const": "dir"},
                        "path": {"type": "string"},
                        "drange": {"enum": ["unit", "signed"]},
                        "valid_fraction": {
                            "type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                        },
                    },
                    "required": ["kind", "path"],
                    "additionalProperties": False,
                },
            ],
        },
        "elvae": {
            "type": "object",
            "properties": {
                "c": {"type": "number", "minimum": 0},
                "latent_dim": {"type": "integer", "minimum": 1},
                "mc_samples": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "sr": {
            "type": "object",
            "properties": {
                "hr_dir": {"type": "string"},
                "scale": {"type": "integer", "minimum": 1},
                "border": {"type": "integer", "minimum": 0},
                "methods": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "properties": {
                            "name": {"type": "string", "minLength": 1},
                            "checkpoint": {"type": "string"},
                            "architecture": _ARCHITECTURE,
                            "init": {"enum": ["fan-in", "gaussian"]},
                            "gaussian_std": {"type": "number", "minimum": 0},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                        "required": ["name"],
                        "additionalProperties": False,
                    },
                },
            },
            "required": ["hr_dir", "scale", "methods"],
            "additionalProperties": False,
        },
        "select_c": {
            "type": "object",
            "properties": {
                "ref": _SOURCE,
                "candidates": {
                    "type": "object",
                    "minProperties": 2,
                    "additionalProperties": _SOURCE,
                },
                "bandwidth": {"type": "number", "exclusiveMinimum": 0},
                "n_samples": {"type": "integer", "minimum": 2},
            },
            "required": ["ref", "candidates"],
            "additionalProperties": False,
        },
        "grad_check": {
            "type": "object",
            "properties": {
                "pairs": {"type": "integer", "minimum": 1},
                "ssim_size": {"type": "integer", "minimum": 13},
                "ms_size": {"type": "integer", "minimum": 13},
                "ms_scales": {"type": "integer", "minimum": 1},
                "corrupt": {"type": "string"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def validate_config(doc: dict) -> dict:
    """Checks one document against the schema; returns it unchanged.

    Raises ConfigError with the offending path so a typo in a nested block
    (including any unknown key) is reported precisely.
    """
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {first.message}")
    return doc


def load_config(path) -> dict:
    """Reads and validates a JSON config file."""
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a JSON object at the top level")
    return validate_config(doc)


def require_blocks(config: dict, *blocks: str) -> None:
    """Demands that the named top-level blocks are present."""
    missing = [b for b in blocks if b not in config]
    if missing:
        raise ConfigError(f"config is missing required block(s): {', '.join(missing)}")
