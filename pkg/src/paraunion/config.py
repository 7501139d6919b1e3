"""Run configuration files: JSON documents checked against a schema before
anything executes, and the builders that turn them into problem instances."""
from __future__ import annotations

import copy
import json

import jsonschema
import numpy as np

from .engine import IterationConfig, LambdaSchedule
from .operators import operator_from_dict
from .problems import (ProblemInstance, make_box_ball, make_sparse_affine_feasibility,
                       make_toy_1d, random_halfspaces_through)
from .space import as_point, constraint_set_from_dict
from .union import OperatorList, SelectionPolicy, UnionOperator, selection_from_dict


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_int = {"type": "integer"}
_vec = {"type": "array", "items": _num, "minItems": 1}
_obj = {"type": "object"}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "required": ["builtin"],
            "properties": {
                "builtin": {"enum": ["toy-halving", "toy-two-branch", "sparse-affine",
                                     "halfspaces", "box-ball", "inline"]},
                "x0": _vec, "x0_index": _int,
                "n": _int, "k": _int, "s": _int, "seed": _int,
                "seeds": {"type": "array", "items": _int, "minItems": 1},
                "count": _int, "point": _vec,
                "center": _vec, "half_width": _num, "radius": _num,
                "constraint": _obj, "operators": {"type": "array", "items": _obj, "minItems": 1},
                "z_star": _vec, "theta": _vec,
            },
        },
        "selection": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": ["constant-full", "nearest-operators", "sparse-support"]},
                           "tau_tie": _num, "s": _int},
        },
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"kind": {"enum": list(SelectionPolicy.KINDS)}, "seed": _int},
        },
        "iteration": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["plain", "km"]}, "kappa": _num,
                "lambda": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {"kind": {"enum": ["constant", "periodic", "seeded-uniform"]},
                                   "value": _num, "values": _vec, "seed": _int},
                },
                "max_iter": _int, "tol_residual": _num, "stall_window": _int,
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"epsilon": _vec, "delta_samples": _int, "seed": _int,
                           "delta_sampling": {"enum": ["random", "grid"]}},
        },
        "validate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"samples": _int, "probe_points": _int, "seed": _int,
                           "M": _num, "radii": _vec},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"},
                           "formats": {"type": "array",
                                       "items": {"enum": ["csv", "txt", "json"]}}},
        },
    },
}


def parse_config(text, source="<config>"):
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            lines.append(f"{source}: field '{where}': {e.message}")
        raise ConfigError("\n".join(lines))
    return cfg


def load_config(path):
    with open(path) as f:
        return parse_config(f.read(), str(path))


def override_seed(cfg, seed):
    """Replace every seed in the config with `seed`."""
    cfg = copy.deepcopy(cfg)
    prob = cfg["problem"]
    if "seeds" in prob:
        prob["seeds"] = [seed]
    elif prob["builtin"] in ("sparse-affine", "halfspaces", "box-ball"):
        prob["seed"] = seed
    for section in ("policy", "analysis", "validate"):
        if section in cfg:
            cfg[section]["seed"] = seed
    lam = cfg.get("iteration", {}).get("lambda")
    if lam is not None and lam["kind"] == "seeded-uniform":
        lam["seed"] = seed
    return cfg


def problem_seeds(cfg):
    prob = cfg["problem"]
    if "seeds" in prob:
        return list(prob["seeds"])
    return [prob.get("seed", 0)]


def iteration_config(cfg):
    it = cfg.get("iteration", {})
    lam = dict(it.get("lambda", {"kind": "constant", "value": 0.5}))
    if "values" in lam:
        lam["values"] = tuple(lam["values"])
    pol = cfg.get("policy", {})
    ic = IterationConfig(mode=it.get("mode", "plain"), kappa=float(it.get("kappa", 0.25)),
                         lambda_schedule=LambdaSchedule(**lam),
                         policy=SelectionPolicy(pol.get("kind", "first-index"), pol.get("seed", 0)),
                         max_iter=it.get("max_iter", 10_000),
                         tol_residual=float(it.get("tol_residual", 1e-10)),
                         stall_window=it.get("stall_window", 10))
    try:
        ic.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return ic


def _get(prob, key, where):
    if key not in prob:
        raise ConfigError(f"field 'problem/{key}' is required for builtin '{where}'")
    return prob[key]


def build_instance(cfg, seed=None):
    """The ProblemInstance described by `cfg`, using `seed` for seeded builtins."""
    prob = cfg["problem"]
    kind = prob["builtin"]
    seed = prob.get("seed", 0) if seed is None else seed
    sel = cfg.get("selection")
    try:
        if kind == "toy-halving":
            inst = make_toy_1d("halving", prob.get("x0", [8.0])[0])
        elif kind == "toy-two-branch":
            inst = make_toy_1d("two-branch", prob.get("x0", [8.0])[0])
        elif kind == "sparse-affine":
            inst = make_sparse_affine_feasibility(_get(prob, "n", kind), _get(prob, "k", kind),
                                                  _get(prob, "s", kind), seed,
                                                  tau=(sel or {}).get("tau_tie", 1e-12))
        elif kind == "halfspaces":
            inst = random_halfspaces_through(_get(prob, "point", kind), _get(prob, "count", kind),
                                             seed, selection=(sel or {}).get("kind", "constant-full"))
        elif kind == "box-ball":
            inst = make_box_ball(_get(prob, "center", kind), _get(prob, "half_width", kind),
                                 _get(prob, "radius", kind), seed,
                                 selection=(sel or {}).get("kind", "constant-full"))
        else:
            ops = [operator_from_dict(d) for d in _get(prob, "operators", kind)]
            n = ops[0].dim
            theta = prob.get("theta", [0.0] * n)
            C = (constraint_set_from_dict(prob["constraint"]) if "constraint" in prob
                 else constraint_set_from_dict({"kind": "whole-space", "theta": theta}))
            phi = selection_from_dict(sel or {"kind": "constant-full"})
            U = UnionOperator(OperatorList(ops), phi, C)
            z = None if "z_star" not in prob else as_point(prob["z_star"], n)
            inst = ProblemInstance("inline", n, U, [], z, "common", {})
            if z is not None and not inst.check_z_star():
                raise ConfigError("problem/z_star is not fixed by every operator")
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"problem: {e}") from e
    if sel is not None and kind not in ("inline",) and sel["kind"] != inst.union.selection.kind:
        inst.union.selection = selection_from_dict(sel)
    return inst


def starting_point(cfg, inst):
    prob = cfg["problem"]
    if "x0" in prob:
        return as_point(prob["x0"], inst.dim)
    if not inst.x0s:
        raise ConfigError("field 'problem/x0' is required for this problem")
    idx = prob.get("x0_index", len(inst.x0s) - 1)
    if not 0 <= idx < len(inst.x0s):
        raise ConfigError(f"field 'problem/x0_index': must lie in 0..{len(inst.x0s) - 1}")
    return np.array(inst.x0s[idx])
