"""JSON documents: run configuration, benchmark plan and fitted-model file."""

from __future__ import annotations

import json
import os
from pathlib import Path

import jsonschema
import numpy as np

from .base_models import BaseModelSpec, FittedBaseModel
from .basis import BasisEvaluator, BasisSpec
from .bench import BenchPlan
from .dataset import Roles
from .em import CdstModel, EmConfig, StackParams
from .synth import ScenarioSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Configuration document failed validation."""


_name_or_index = {"type": ["string", "integer"]}

_model_schema = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": ["ols", "ridge", "regional_ols", "knn", "poly_ridge"]},
        "features": {"type": ["array", "null"], "items": _name_or_index},
        "alpha": {"type": "number", "minimum": 0},
        "k": {"type": "integer", "minimum": 1},
        "degree": {"type": "integer", "minimum": 1},
        "column": _name_or_index,
        "threshold": {"type": "number"},
        "side": {"enum": ["lt", "ge"]},
    },
}

_basis_schema = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "placement": {"enum": ["kmeans", "grid", "product"]},
        "M": {"type": "integer", "minimum": 0},
        "bandwidths": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                                 {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0},
                                  "minItems": 1}]},
        "blocks": {"type": "array", "items": {"type": "array", "items": _name_or_index}},
        "block_counts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "grid_counts": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "kmeans_seed": {"type": "integer"},
        "kmeans_max_iter": {"type": "integer", "minimum": 1},
    },
}

_em_schema = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["paper", "exact"]},
    },
}

_folds_schema = {"type": ["integer", "null"], "minimum": 2}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "data", "models"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "required": ["response", "features", "weights"],
            "properties": {
                "path": {"type": "string"},
                "response": {"type": "string"},
                "features": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "weights": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
        },
        "models": {"type": "array", "items": _model_schema, "minItems": 1},
        "basis": _basis_schema,
        "folds": _folds_schema,
        "fold_seed": {"type": "integer"},
        "em": _em_schema,
        "split": {
            "type": "object",
            "additionalProperties": False,
            "required": ["train_fraction"],
            "properties": {"train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                           "seed": {"type": "integer"}},
        },
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"model": {"type": "string"}}},
    },
}

BENCH_PLAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "scenario"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "scenario"],
            "properties": {
                "family": {"enum": ["covariate", "spatial"]},
                "scenario": {"type": "integer"},
                "n": {"type": "integer", "minimum": 2},
                "noise_sd": {"type": "number", "exclusiveMinimum": 0},
                "gp_range": {"type": "number", "exclusiveMinimum": 0},
                "rho": {"type": "number", "minimum": -1, "maximum": 1},
            },
        },
        "replications": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer"},
        "train_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "models": {"type": "array", "items": _model_schema, "minItems": 1},
        "basis": _basis_schema,
        "folds": _folds_schema,
        "methods": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "em": _em_schema,
    },
}


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _validate(doc, schema, what):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{what}: {where}: {exc.message}") from None


def _resolve(ref, names, what):
    if isinstance(ref, int):
        if not 0 <= ref < len(names):
            raise ConfigError(f"{what}: column index {ref} out of range")
        return ref
    if ref not in names:
        raise ConfigError(f"{what}: unknown column {ref!r}; available {list(names)}")
    return list(names).index(ref)


def model_spec_from_config(d, feature_names) -> BaseModelSpec:
    d = dict(d)
    name = d.get("name", d["kind"])
    if d.get("features") is not None:
        d["features"] = [_resolve(f, feature_names, f"model {name!r}") for f in d["features"]]
    if "column" in d:
        d["column"] = _resolve(d["column"], feature_names, f"model {name!r}")
    try:
        return BaseModelSpec.from_dict(d)
    except ValueError as exc:
        raise ConfigError(f"model {name!r}: {exc}") from None


def basis_spec_from_config(d, weight_names) -> BasisSpec:
    d = dict(d or {})
    if "blocks" in d:
        d["blocks"] = tuple(tuple(_resolve(c, weight_names, "basis block") for c in b) for b in d["blocks"])
    for key in ("block_counts", "grid_counts"):
        if key in d:
            d[key] = tuple(d[key])
    if "bandwidths" in d and not isinstance(d["bandwidths"], list):
        d["bandwidths"] = (d["bandwidths"],)
    elif "bandwidths" in d:
        d["bandwidths"] = tuple(d["bandwidths"])
    try:
        return BasisSpec(**d)
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}") from None


def em_config_from_config(d) -> EmConfig:
    return EmConfig(**(d or {}))


def _unique_names(specs):
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"model names must be unique, got {names}")


class RunConfig:
    """Validated ``fit`` configuration."""

    def __init__(self, doc):
        _validate(doc, RUN_CONFIG_SCHEMA, "config")
        data = doc["data"]
        self.data_path = data.get("path")
        self.roles = Roles(data["response"], tuple(data["features"]), tuple(data["weights"]))
        self.models = tuple(model_spec_from_config(m, self.roles.features) for m in doc["models"])
        _unique_names(self.models)
        self.basis = basis_spec_from_config(doc.get("basis"), self.roles.weights)
        self.folds = doc.get("folds")
        self.fold_seed = doc.get("fold_seed", 0)
        self.em = em_config_from_config(doc.get("em"))
        self.split = doc.get("split")
        self.model_out = doc.get("output", {}).get("model")

    @classmethod
    def load(cls, path):
        return cls(load_json(path))


_SCENARIO_COLUMNS = {
    "covariate": ("x1", "x2", "x3", "x4", "x5"),
    "spatial": ("s1", "s2", "x1", "x2", "x3", "x4", "x5"),
}


def bench_plan_from_config(doc) -> BenchPlan:
    _validate(doc, BENCH_PLAN_SCHEMA, "plan")
    sc = doc["scenario"]
    try:
        scenario = ScenarioSpec(**sc)
    except ValueError as exc:
        raise ConfigError(f"plan: scenario: {exc}") from None
    features = _SCENARIO_COLUMNS[scenario.family]
    weights = ("x1", "x2") if scenario.family == "covariate" else ("s1", "s2")
    roster = tuple(model_spec_from_config(m, features) for m in doc.get("models", ()))
    kwargs = dict(
        scenario=scenario,
        replications=doc.get("replications", 20),
        roster=roster,
        basis=basis_spec_from_config(doc.get("basis"), weights),
        folds=doc.get("folds"),
        master_seed=doc.get("master_seed", 0),
        train_fraction=doc.get("train_fraction", 0.75),
        em=em_config_from_config(doc.get("em")),
    )
    if "methods" in doc:
        kwargs["methods"] = tuple(doc["methods"])
    try:
        return BenchPlan(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"plan: {exc}") from None


# --- model file ---------------------------------------------------------

def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _matrix(a):
    return [_floats(row) for row in np.asarray(a, dtype=float)]


def _base_model_to_dict(m: FittedBaseModel):
    return {
        "spec": m.spec.to_dict(),
        "n_features": m.n_features,
        "coef": None if m.coef is None else _floats(m.coef),
        "train_x": None if m.train_x is None else _matrix(m.train_x),
        "train_y": None if m.train_y is None else _floats(m.train_y),
        "training_rss": float(m.training_rss),
        "n_train": int(m.n_train),
        "parameter_count": int(m.parameter_count),
    }


def _base_model_from_dict(d) -> FittedBaseModel:
    spec = BaseModelSpec.from_dict(d["spec"])
    arr = lambda v: None if v is None else np.asarray(v, dtype=float)  # noqa: E731
    train_x = arr(d["train_x"])
    if train_x is not None:
        train_x = train_x.reshape(len(d["train_y"]), -1)
    return FittedBaseModel(spec, int(d["n_features"]), arr(d["coef"]), train_x, arr(d["train_y"]),
                           float(d["training_rss"]), int(d["n_train"]), int(d["parameter_count"]))


def model_to_dict(model: CdstModel) -> dict:
    basis = model.basis
    return {
        "schema_version": SCHEMA_VERSION,
        "feature_names": list(model.x_names),
        "weight_names": list(model.xtilde_names),
        "model_names": list(model.model_names),
        "base_models": [_base_model_to_dict(m) for m in model.full_models],
        "basis": {
            "dim": int(basis.dim),
            "centers": _matrix(basis.centers),
            "blocks": [list(b) for b in basis.blocks],
            "bandwidths": _floats(basis.bandwidths),
        },
        "mu": _floats(model.params.mu),
        "gamma": _floats(model.gamma_hat),
        "tau2": _floats(model.params.tau2),
        "sigma2": float(model.params.sigma2),
        "lambda": _floats(model.lambdas),
        "converged": bool(model.converged),
        "n_iter": int(model.n_iter),
    }


def model_from_dict(d) -> CdstModel:
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported model schema version {d.get('schema_version')!r}")
    try:
        b = d["basis"]
        centers = np.asarray(b["centers"], dtype=float).reshape(-1, int(b["dim"]))
        basis = BasisEvaluator(centers, tuple(tuple(x) for x in b["blocks"]), tuple(b["bandwidths"]))
        params = StackParams(np.asarray(d["mu"]), np.asarray(d["tau2"]), float(d["sigma2"]))
        return CdstModel(
            params,
            np.asarray(d["gamma"], dtype=float),
            basis,
            tuple(_base_model_from_dict(m) for m in d["base_models"]),
            (),
            bool(d["converged"]),
            int(d["n_iter"]),
            tuple(d["feature_names"]),
            tuple(d["weight_names"]),
            tuple(d.get("model_names", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model file: {exc}") from None


def save_model(model: CdstModel, path):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    # json writes floats with repr, which round-trips binary64 exactly
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_model(path) -> CdstModel:
    return model_from_dict(load_json(path))
