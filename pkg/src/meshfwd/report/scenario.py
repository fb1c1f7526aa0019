"""Scenario files: versioned JSON describing one engine run."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

SCHEMA_VERSION = "meshfwd-scenario/1"
ENGINES = ("closedform-sinr", "closedform-hbh", "closedform-hetero", "markov", "simulate")

_prob = {"type": "number", "minimum": 0, "maximum": 1}
_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["engine", "schemes"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "engine": {"enum": list(ENGINES)},
        "schemes": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "hops": {"type": "integer", "minimum": 1},
        "e": {"oneOf": [_prob, {"type": "array", "items": _prob, "minItems": 1}]},
        "conditional_errors": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["link", "active", "e"],
                "properties": {
                    "link": {"type": "integer"},
                    "active": {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                    "e": _prob,
                },
            },
        },
        "links": {
            "type": "object",
            "additionalProperties": False,
            "patternProperties": {
                "^[1-3]$": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["tx", "rx"],
                    "properties": {"tx": _point, "rx": _point},
                }
            },
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0},
                "eta": {"type": "number", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "tx_power": {"type": "number", "exclusiveMinimum": 0},
                "fading_param": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d_h": {"type": "number", "exclusiveMinimum": 0},
                "d_v": {"type": "number", "minimum": 0},
                "source_tx_prob": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "cw": {"type": "integer", "minimum": 0},
                "link_rate": {"type": "number", "exclusiveMinimum": 0},
                "packet_bytes": {"type": "integer", "minimum": 1},
                "ack_bytes": {"type": "integer", "minimum": 0},
                "prop_delay": {"type": "number", "minimum": 0},
                "flow_rate": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "stop_after": {"type": "integer", "minimum": 1},
                "window": {"type": ["integer", "null"], "minimum": 1},
                "forced_error": {"oneOf": [_prob, {"type": "array", "items": _prob}]},
                "slot_cap": {"type": "integer", "minimum": 1},
                "queue_capacity": {"type": "integer", "minimum": 1},
            },
        },
        "reps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "strict_paper": {"type": "boolean"},
    },
}

# parameters each engine cannot run without
_REQUIRED = {
    "markov": ("n", "m", "e"),
    "closedform-hbh": ("n", "e"),
    "closedform-hetero": ("e",),
    "closedform-sinr": (),
    "simulate": ("n", "m"),
}


class ScenarioError(ValueError):
    """Schema violation or contradictory parameters."""


@dataclass(frozen=True)
class Scenario:
    name: str
    engine: str
    schemes: tuple
    params: dict = field(default_factory=dict)
    reps: int = 1
    seed: int = 0
    strict: bool = False

    def get(self, key, default=None):
        return self.params.get(key, default)

    def replace_params(self, **updates) -> "Scenario":
        params = dict(self.params)
        params.update(updates)
        return Scenario(self.name, self.engine, self.schemes, params, self.reps, self.seed, self.strict)

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA_VERSION, "name": self.name, "engine": self.engine,
               "schemes": list(self.schemes), **self.params, "reps": self.reps,
               "seed": self.seed, "strict_paper": self.strict}
        return out


def _location(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path) if err.absolute_path else "<root>"


def validate_document(doc) -> None:
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{_location(e)}: {e.message}" for e in errors]
        raise ScenarioError("invalid scenario:\n  " + "\n  ".join(lines))


def _check_consistency(s: Scenario) -> None:
    missing = [p for p in _REQUIRED[s.engine] if p not in s.params]
    if missing:
        raise ScenarioError(f"engine {s.engine!r} needs parameter(s) {missing}")
    e = s.get("e")
    if s.engine == "closedform-hetero" and (not isinstance(e, list) or len(e) != 3):
        raise ScenarioError("/e: closedform-hetero needs three error probabilities")
    if s.engine in ("markov", "closedform-hbh") and isinstance(e, list):
        raise ScenarioError(f"/e: engine {s.engine!r} takes a single error probability")
    if s.engine == "closedform-hbh" and s.get("n") not in (3, 7):
        raise ScenarioError("/n: closedform-hbh supports 3 or 7 paths")
    if s.engine == "closedform-sinr" and "conditional_errors" not in s.params and "links" not in s.params:
        raise ScenarioError("closedform-sinr needs conditional_errors or links (+ channel)")
    n, k = s.get("n"), s.get("k")
    if k is not None and n is not None and k > n:
        raise ScenarioError(f"/k: generation size {k} exceeds the {n} paths")
    if s.strict and n is not None and any("NC" in name for name in s.schemes):
        kk = k if k is not None else 2
        if (1 << kk) - 1 != n:
            raise ScenarioError(f"strict mode needs n = 2^k - 1: k={kk} gives {(1 << kk) - 1}, not n={n}")
    forced = s.get("sim", {}).get("forced_error")
    if isinstance(forced, list) and n is not None and len(forced) != n:
        raise ScenarioError(f"/sim/forced_error: need {n} entries, one per path")


def scenario_from_dict(doc: dict, default_name: str = "scenario") -> Scenario:
    validate_document(doc)
    body = dict(doc)
    body.pop("schema", None)
    s = Scenario(
        name=body.pop("name", default_name),
        engine=body.pop("engine"),
        schemes=tuple(body.pop("schemes")),
        reps=body.pop("reps", 1),
        seed=body.pop("seed", 0),
        strict=body.pop("strict_paper", False),
        params=body,
    )
    _check_consistency(s)
    return s


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return scenario_from_dict(doc, default_name=path.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
