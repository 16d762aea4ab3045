"""JSON configuration files: schema validation and (de)serialization.

Scenario and sweep files mirror :class:`~hybridq.simulator.SystemConfig` and
:class:`~hybridq.experiments.SweepSpec`.  All times are minutes, rates per
minute; distributions are objects like ``{"kind": "normal-truncated-at-zero",
"mean": 5, "stddev": 1}``.  Unknown keys are rejected.
"""

from __future__ import annotations

import json

import jsonschema

from .errors import ConfigError
from .experiments import SweepSpec
from .simulator import LearningConfig, SystemConfig
from .stochastic import Distribution

_NUMBER = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}

DISTRIBUTION_SCHEMA = {
    "type": "object",
    "oneOf": [
        {
            "properties": {"kind": {"const": "deterministic"}, "value": _NONNEG},
            "required": ["kind", "value"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "exponential"}, "mean": _NONNEG},
            "required": ["kind", "mean"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "normal-truncated-at-zero"},
                           "mean": _NUMBER, "stddev": _NONNEG},
            "required": ["kind", "mean", "stddev"],
            "additionalProperties": False,
        },
        {
            "properties": {"kind": {"const": "empirical"},
                           "samples": {"type": "array", "items": _NONNEG, "minItems": 1}},
            "required": ["kind", "samples"],
            "additionalProperties": False,
        },
    ],
}

LEARNING_SCHEMA = {
    "type": "object",
    "properties": {
        "catalog_size": {"type": "integer", "minimum": 1},
        "popularity": {"enum": ["uniform", "zipf"]},
        "zipf_exponent": _POSITIVE,
        "initial_db_size": {"type": "integer", "minimum": 0},
        "session_length": _POSITIVE,
    },
    "required": ["catalog_size"],
    "additionalProperties": False,
}

SYSTEM_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "mode": {"enum": ["pure-human", "hybrid", "hybrid-learning"]},
        "n_clients": {"type": "integer", "minimum": 1},
        "lambda_bar": _NONNEG,
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "n_operators": {"type": "integer", "minimum": 1},
        "dist_s_alpha_human": DISTRIBUTION_SCHEMA,
        "dist_s_alpha_agent": DISTRIBUTION_SCHEMA,
        "dist_s_beta": DISTRIBUTION_SCHEMA,
        "dist_epsilon": DISTRIBUTION_SCHEMA,
        "horizon": _POSITIVE,
        "warmup": _NONNEG,
        "seed": {"type": "integer"},
        "queue_cap": {"type": "integer", "minimum": 1},
        "learning": LEARNING_SCHEMA,
    },
    "required": ["mode", "n_clients", "lambda_bar", "horizon"],
    "additionalProperties": False,
}

SWEEP_SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "base": SYSTEM_CONFIG_SCHEMA,
        "grid": {
            "type": "object",
            "properties": {
                "n_clients": {"type": "array", "items": {"type": "integer", "minimum": 1},
                              "minItems": 1},
                "alpha": {"type": "array", "items": {"type": "number", "minimum": 0,
                                                     "maximum": 1}, "minItems": 1},
                "s_beta_mean": {"type": "array", "items": _POSITIVE, "minItems": 1},
                "n_operators": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                "minItems": 1},
                "c_ratio": {"type": "array", "items": _POSITIVE, "minItems": 1},
            },
            "additionalProperties": False,
            "minProperties": 1,
        },
        "replications": {"type": "integer", "minimum": 2},
        "sla_threshold": _POSITIVE,
    },
    "required": ["base", "grid"],
    "additionalProperties": False,
}


def distribution_from_dict(data: dict) -> Distribution:
    kind = data.get("kind")
    if kind == "deterministic":
        return Distribution.deterministic(data["value"])
    if kind == "exponential":
        return Distribution.exponential(data["mean"])
    if kind == "normal-truncated-at-zero":
        return Distribution.normal(data["mean"], data["stddev"])
    if kind == "empirical":
        return Distribution.empirical(data["samples"])
    raise ConfigError(f"unknown distribution kind {kind!r}")


def distribution_to_dict(dist: Distribution) -> dict:
    if dist.kind == "deterministic":
        return {"kind": dist.kind, "value": dist.value}
    if dist.kind == "exponential":
        return {"kind": dist.kind, "mean": dist.mean}
    if dist.kind == "normal-truncated-at-zero":
        return {"kind": dist.kind, "mean": dist.mean, "stddev": dist.stddev}
    if dist.kind == "empirical":
        return {"kind": dist.kind, "samples": list(dist.samples)}
    raise ConfigError(f"unknown distribution kind {dist.kind!r}")


def _validated(data: dict, schema: dict, what: str) -> dict:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {path}: {err.message}") from None
    return data


def parse_system_config(data: dict) -> SystemConfig:
    _validated(data, SYSTEM_CONFIG_SCHEMA, "scenario config")
    kwargs = dict(data)
    for key in ("dist_s_alpha_human", "dist_s_alpha_agent", "dist_s_beta", "dist_epsilon"):
        if key in kwargs:
            kwargs[key] = distribution_from_dict(kwargs[key])
    if "learning" in kwargs:
        kwargs["learning"] = LearningConfig(**kwargs["learning"])
    return SystemConfig(**kwargs)


def system_config_to_dict(config: SystemConfig) -> dict:
    out = {
        "mode": config.mode,
        "n_clients": config.n_clients,
        "lambda_bar": config.lambda_bar,
        "alpha": config.alpha,
        "n_operators": config.n_operators,
        "dist_s_alpha_human": distribution_to_dict(config.dist_s_alpha_human),
        "dist_s_beta": distribution_to_dict(config.dist_s_beta),
        "dist_epsilon": distribution_to_dict(config.dist_epsilon),
        "horizon": config.horizon,
        "seed": config.seed,
        "queue_cap": config.queue_cap,
    }
    if config.dist_s_alpha_agent is not None:
        out["dist_s_alpha_agent"] = distribution_to_dict(config.dist_s_alpha_agent)
    if config.warmup is not None:
        out["warmup"] = config.warmup
    if config.learning is not None:
        learning = {
            "catalog_size": config.learning.catalog_size,
            "popularity": config.learning.popularity,
            "zipf_exponent": config.learning.zipf_exponent,
            "initial_db_size": config.learning.initial_db_size,
        }
        if config.learning.session_length is not None:
            learning["session_length"] = config.learning.session_length
        out["learning"] = learning
    return out


def parse_sweep_spec(data: dict) -> SweepSpec:
    _validated(data, SWEEP_SPEC_SCHEMA, "sweep spec")
    return SweepSpec(
        base=parse_system_config(data["base"]),
        grid=data["grid"],
        replications=data.get("replications", 100),
        sla_threshold=data.get("sla_threshold", 5.0),
    )


def load_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"not valid JSON: {path}: {err}") from None


def load_system_config(path) -> SystemConfig:
    return parse_system_config(load_json(path))


def load_sweep_spec(path) -> SweepSpec:
    return parse_sweep_spec(load_json(path))
