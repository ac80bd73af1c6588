"""Run configuration: JSON schema, defaults and centralised tolerances.

A configuration file is a JSON object::

    {
      "pair": {"a": 0, "rho": {"atoms": [[0, 1]]}},
      "grid": {"lo": -2, "hi": 2, "n": 2001},
      "seed": 0,
      "tolerances": {"arcsine_density": 2e-3}
    }

Only ``pair`` is needed by the pair-driven subcommands; a bare pair object
``{"a": ..., "rho": ...}`` is accepted in its place.  ``tolerances``
overrides entries of :data:`TOLERANCES` by name.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from . import measure as ms
from . import semigroup as sg
from .errors import InputError, SchemaViolation

# every numerical threshold used by ``verify``; defaults are the normative values
TOLERANCES = {
    # measure
    "measure_mass": 1e-4,
    "measure_moment": 1e-3,
    "sample_ks_factor": 2.0,
    # transform
    "pick_slack": 1e-9,
    "round_trip_l1": 1e-3,
    "arcsine_density": 2e-3,
    "arcsine_mass": 1e-4,
    "arcsine_runtime": 10.0,
    "atom_mass": 1e-3,
    # convolution
    "convolution_moments": 2e-3,
    "convolution_runtime": 5.0,
    "mean_additivity": 1e-6,
    "affinity_l1": 1e-3,
    "associativity_l1": 1e-3,
    "route_l1": 2e-3,
    "noncommutativity": 0.01,
    # semigroup
    "closed_form_flow": 1e-8,
    "drift_flow": 1e-10,
    "drift_atom": 1e-6,
    "abel": 1e-6,
    "semigroup_law": 1e-7,
    "inverse_round_trip": 1e-8,
    "schurmann": 1e-12,
    "observed_order": 0.9,
    "contour_moment": 1e-4,
    # matrix oracle
    "independence": 1e-12,
    "resolvent_identity": 1e-10,
    "H_composition": 1e-12,
    "marginal_fidelity": 1e-10,
    "conditional_expectation": 1e-12,
    "corollary_T": 1e-6,
    # markov
    "unitality": 1e-6,
    "positivity": 1e-9,
    "chapman_kolmogorov": 5e-3,
    "generator_pin": 1e-6,
    "kernel_mean": 1e-3,
    "mc_sigmas": 3.0,
    "classical_runtime": 60.0,
    # martingale
    "martingale": 1e-7,
    # errata
    "oracle_agreement": 1e-4,
}

_MEASURE = {
    "type": "object",
    "properties": {
        "atoms": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "density": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "grid": {
            "type": "object",
            "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                           "n": {"type": "integer", "minimum": 2}},
            "required": ["lo", "hi"],
        },
    },
    "dependentRequired": {"density": ["grid"]},
}

_PAIR = {
    "type": "object",
    "properties": {"a": {"type": "number"}, "rho": _MEASURE},
}

SCHEMA = {
    "type": "object",
    "properties": {
        "pair": _PAIR,
        "a": {"type": "number"},
        "rho": _MEASURE,
        "grid": {
            "type": "object",
            "properties": {"lo": {"type": "number"}, "hi": {"type": "number"},
                           "n": {"type": "integer", "minimum": 3}},
            "required": ["lo", "hi", "n"],
        },
        "seed": {"type": "integer", "minimum": 0},
        "tolerances": {
            "type": "object",
            "propertyNames": {"enum": sorted(TOLERANCES)},
            "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
        },
    },
}

MEASURE_SCHEMA = _MEASURE


def validate(obj, schema=SCHEMA) -> None:
    """Raise :class:`SchemaViolation` naming the offending field path."""
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(obj))
    if err is not None:
        raise SchemaViolation(err.message, err.absolute_path)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputError(f"{path}: not UTF-8 JSON ({e})") from None


def _pair_dict(cfg):
    if "pair" in cfg:
        return cfg["pair"], ("pair",)
    if "a" in cfg or "rho" in cfg:
        return {k: cfg[k] for k in ("a", "rho") if k in cfg}, ()
    return None, ()


def config_from_dict(cfg) -> dict:
    """Validate a configuration object and fill in defaults.

    Returns a dict with keys ``pair`` (a :class:`CharacteristicPair` or
    ``None``), ``family``, ``grid`` (tuple or ``None``), ``seed`` and
    ``tolerances`` (the full table with overrides applied).
    """
    validate(cfg)
    pd, where = _pair_dict(cfg)
    pair = None
    if pd is not None:
        try:
            pair = sg.CharacteristicPair.from_dict(pd)
        except InputError as e:
            raise SchemaViolation(str(e), where) from None
    g = cfg.get("grid")
    tol = dict(TOLERANCES)
    tol.update(cfg.get("tolerances", {}))
    return {
        "pair": pair,
        "family": pair.family() if pair is not None else None,
        "grid": (g["lo"], g["hi"], g["n"]) if g else None,
        "seed": cfg.get("seed", 0),
        "tolerances": tol,
    }


def load_config(path) -> dict:
    """Read and validate a UTF-8 JSON configuration file (see :func:`config_from_dict`)."""
    return config_from_dict(_read_json(path))


def load_pair(path) -> sg.CharacteristicPair:
    cfg = load_config(path)
    if cfg["pair"] is None:
        raise SchemaViolation("a characteristic pair is required", ("pair",))
    return cfg["pair"]


def load_measure(path) -> ms.DiscretizedMeasure:
    """A probability measure from JSON (measure object) or CSV (measure CSV format)."""
    p = Path(path)
    if p.suffix.lower() == ".csv":
        try:
            return ms.from_csv(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"{path}: no such file") from None
    d = _read_json(p)
    validate(d, MEASURE_SCHEMA)
    return ms.from_dict(d)
