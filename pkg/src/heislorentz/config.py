"""Run configuration: JSON schema, defaults and builders for paths, splittings and lattices."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from .examples import AdamsSpec, MonodromySpec, adams_path, homogeneous_path, monodromy_path
from .paths import AutomorphismPath, EquivalenceWitness, PathError, custom_path, one_parameter_path, rescale_path
from .quotient import LatticeError, LatticeSpec, parse_rational, standard_lattice
from .symplectic import InvalidSplittingError, Splitting, standard_splitting


class ConfigError(ValueError):
    """Invalid configuration; ``pointer`` is a JSON pointer to the offending value."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


_number = {"type": "number"}
_rational = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"}]}
_real = {"anyOf": [_number, _rational]}
_matrix = {"type": "array", "minItems": 3, "items": {"type": "array", "items": _number}}
_p_basis = {"type": "array", "minItems": 2, "items": {"type": "array", "items": _number}}
_rational_matrix = {"type": "array", "minItems": 3, "items": {"type": "array", "items": _real}}

_path_schema = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["homogeneous", "adams", "monodromy", "one_parameter", "custom", "rescaled"]},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "homogeneous"}}},
            "then": {
                "properties": {"kind": True, "lambda": {"type": "array", "items": _rational, "minItems": 1}},
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"kind": {"const": "adams"}}},
            "then": {
                "properties": {
                    "kind": True,
                    "center": _number,
                    "width": {"type": "number", "exclusiveMinimum": 0},
                    "floor": {"type": "number", "exclusiveMinimum": 0},
                    "amplitude": {"type": "number", "minimum": 0},
                    "quad_tol": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"kind": {"const": "monodromy"}}},
            "then": {"properties": {"kind": True}, "additionalProperties": False},
        },
        {
            "if": {"properties": {"kind": {"const": "one_parameter"}}},
            "then": {
                "required": ["generator"],
                "properties": {
                    "kind": True,
                    "generator": _matrix,
                    "period": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"kind": {"const": "custom"}}},
            "then": {
                "required": ["times", "matrices"],
                "properties": {
                    "kind": True,
                    "times": {"type": "array", "items": _number, "minItems": 4},
                    "matrices": {"type": "array", "items": _matrix, "minItems": 4},
                    "period": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"kind": {"const": "rescaled"}}},
            "then": {
                "required": ["base", "c"],
                "properties": {
                    "kind": True,
                    "base": {"$ref": "#/$defs/path"},
                    "c": {"type": "number", "not": {"const": 0}},
                    "d": _number,
                },
                "additionalProperties": False,
            },
        },
    ],
}

_splitting_schema = {
    "type": "object",
    "required": ["p_basis"],
    "properties": {"z0": _real, "p_basis": _p_basis},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["n", "path"],
    "$defs": {"path": _path_schema, "splitting": _splitting_schema},
    "properties": {
        "n": {"type": "integer", "minimum": 1, "maximum": 8},
        "path": {"$ref": "#/$defs/path"},
        "splitting": {"$ref": "#/$defs/splitting"},
        "lattice": {
            "type": "object",
            "properties": {
                "log_basis": _rational_matrix,
                "half_center": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "grid": {
            "type": "object",
            "properties": {
                "t_min": _number,
                "t_max": _number,
                "samples": {"type": "integer", "minimum": 0, "maximum": 100000},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "algebraic": {"type": "number", "exclusiveMinimum": 0},
                "fd": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "samples": {
            "type": "object",
            "properties": {
                "points": {"type": "integer", "minimum": 1},
                "deck": {"type": "integer", "minimum": 1},
                "isometry": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "equivalence": {
            "type": "object",
            "required": ["other", "witness"],
            "properties": {
                "other": {
                    "type": "object",
                    "required": ["path"],
                    "properties": {"path": {"$ref": "#/$defs/path"}, "splitting": {"$ref": "#/$defs/splitting"}},
                    "additionalProperties": False,
                },
                "witness": {
                    "type": "object",
                    "required": ["c"],
                    "properties": {"c": {"type": "number", "not": {"const": 0}}, "d": _number},
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "rigidity": {
            "type": "object",
            "properties": {
                "dims": {"type": "array", "items": {"type": "integer", "minimum": 3, "maximum": 12}, "minItems": 1},
                "trials": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "tolerances": {"algebraic": 1e-9, "fd": 1e-6, "step": 1e-5},
    "samples": {"points": 50, "deck": 200, "isometry": 50},
    "seed": 0,
    "rigidity": {"dims": [3, 4, 5, 6, 7, 8], "trials": 100},
}


def _pointer(parts) -> str:
    return "".join(f"/{str(p).replace('~', '~0').replace('/', '~1')}" for p in parts)


def validate_config(raw: Any) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        best = jsonschema.exceptions.best_match(errors)
        message = "must be nonzero" if best.validator == "not" else best.message
        raise ConfigError(message, _pointer(best.absolute_path))


def _merge(defaults: dict, raw: dict) -> dict:
    out = copy.deepcopy(raw)
    for key, value in defaults.items():
        if isinstance(value, dict):
            out[key] = {**value, **out.get(key, {})}
        else:
            out.setdefault(key, value)
    return out


@dataclass(frozen=True)
class Tolerances:
    algebraic: float = 1e-9
    fd: float = 1e-6
    step: float = 1e-5


@dataclass(frozen=True)
class SampleCounts:
    points: int = 50
    deck: int = 200
    isometry: int = 50


@dataclass(frozen=True)
class GridSpec:
    t_min: float
    t_max: float
    samples: int

    def values(self) -> np.ndarray:
        endpoint = False if self.samples > 1 else True
        return np.linspace(self.t_min, self.t_max, self.samples, endpoint=endpoint)


@dataclass(frozen=True)
class RunConfig:
    """A schema-validated configuration with defaults filled in."""

    n: int
    path: dict
    splitting: Optional[dict]
    lattice: Optional[dict]
    grid: Optional[dict]
    tolerances: Tolerances
    samples: SampleCounts
    seed: int
    equivalence: Optional[dict]
    rigidity: dict
    raw: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_dict(cls, raw: Any, seed: Optional[int] = None) -> "RunConfig":
        validate_config(raw)
        merged = _merge(DEFAULTS, raw)
        if seed is not None:
            merged["seed"] = seed
        return cls(
            n=merged["n"],
            path=merged["path"],
            splitting=merged.get("splitting"),
            lattice=merged.get("lattice"),
            grid=merged.get("grid"),
            tolerances=Tolerances(**merged["tolerances"]),
            samples=SampleCounts(**merged["samples"]),
            seed=merged["seed"],
            equivalence=merged.get("equivalence"),
            rigidity=merged["rigidity"],
            raw=merged,
        )

    @classmethod
    def load(cls, file: str | Path, seed: Optional[int] = None) -> "RunConfig":
        try:
            text = Path(file).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e.strerror}") from e
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
        return cls.from_dict(raw, seed)

    def grid_spec(self, path: AutomorphismPath) -> GridSpec:
        g = self.grid or {}
        lo = g.get("t_min", 0.0)
        hi = g.get("t_max", path.period)
        if hi < lo:
            raise ConfigError("t_max must not be below t_min", "/grid/t_max")
        return GridSpec(float(lo), float(hi), int(g.get("samples", 64)))


def _square(m: list, n: int, pointer: str) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape != (2 * n + 1, 2 * n + 1):
        raise ConfigError(f"expected a {2 * n + 1}x{2 * n + 1} matrix", pointer)
    return a


def build_path(spec: dict, n: int, pointer: str = "/path") -> AutomorphismPath:
    kind = spec["kind"]
    try:
        if kind == "homogeneous":
            lam = spec.get("lambda", ["1"] * n)
            if len(lam) != n:
                raise ConfigError(f"lambda needs {n} entries", pointer + "/lambda")
            return homogeneous_path(n, [parse_rational(x) for x in lam])
        if kind == "adams":
            fields = {k: spec[k] for k in ("center", "width", "floor", "amplitude", "quad_tol") if k in spec}
            return adams_path(AdamsSpec(n=n, **fields)).path
        if kind == "monodromy":
            return monodromy_path(MonodromySpec(n=n))
        if kind == "one_parameter":
            gen = _square(spec["generator"], n, pointer + "/generator")
            return one_parameter_path(gen, spec.get("period", 1.0))
        if kind == "custom":
            mats = [_square(m, n, f"{pointer}/matrices/{i}") for i, m in enumerate(spec["matrices"])]
            if len(mats) != len(spec["times"]):
                raise ConfigError("times and matrices must have equal length", pointer + "/times")
            return custom_path(spec["times"], mats, spec.get("period", 1.0))
        base = build_path(spec["base"], n, pointer + "/base")
        return rescale_path(base, EquivalenceWitness(float(spec["c"]), float(spec.get("d", 0.0))))
    except (PathError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e), pointer) from e


def build_splitting(spec: Optional[dict], n: int, pointer: str = "/splitting") -> Optional[Splitting]:
    if spec is None:
        return None
    z = float(parse_rational(spec.get("z0", 1)))
    z0 = np.zeros(2 * n + 1)
    z0[0] = z
    rows = np.asarray(spec["p_basis"], dtype=float)
    if rows.shape != (2 * n, 2 * n + 1):
        raise ConfigError(f"p_basis needs {2 * n} rows of length {2 * n + 1}", pointer + "/p_basis")
    try:
        return Splitting(z0, rows)
    except InvalidSplittingError as e:
        raise ConfigError(str(e), pointer) from e


def default_splitting(path: AutomorphismPath, n: int) -> Splitting:
    """Standard splitting, scaled to the path's own center generator when it has one."""
    if path.z0 is not None:
        return Splitting(np.asarray(path.z0, dtype=float), standard_splitting(n).p_basis)
    return standard_splitting(n)


def build_lattice(spec: Optional[dict], n: int, pointer: str = "/lattice") -> LatticeSpec:
    if spec is None or "log_basis" not in spec:
        half = True if spec is None else spec.get("half_center", True)
        return standard_lattice(n, half_center=half)
    try:
        rows = [[parse_rational(v) if not isinstance(v, float) else Fraction(v) for v in r] for r in spec["log_basis"]]
        L = LatticeSpec(np.array(rows, dtype=object))
    except (LatticeError, ValueError, ZeroDivisionError) as e:
        raise ConfigError(str(e), pointer + "/log_basis") from e
    if L.n != n:
        raise ConfigError(f"lattice rank {L.n} does not match n={n}", pointer + "/log_basis")
    return L
