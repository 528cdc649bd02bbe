"""Experiment configuration: JSON schema, validation and object builders."""

from __future__ import annotations

import copy
import itertools
import json

import jsonschema
import numpy as np

from . import acquisition, kernels, transforms
from .domain import (
    AffineMean,
    ConstantMean,
    Domain,
    SyntheticIntegrand,
    TabulatedDensity,
    TruncatedGaussianDensity,
    UniformDensity,
)
from .engine import Problem, SelectorConfig
from .exceptions import ConfigError

SCHEMA_VERSION = "1"

_DENSITY_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["uniform", "truncated-gaussian", "tabulated"]},
        "center": {"type": "array", "items": {"type": "number"}},
        "scale": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array"},
    },
    "required": ["kind"],
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "seed": {"type": "integer", "minimum": 0},
        "domain": {
            "type": "object",
            "properties": {
                "lower": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "upper": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            },
            "required": ["lower", "upper"],
        },
        "kernel": {
            "type": "object",
            "properties": {
                "family": {
                    "enum": [
                        "squared-exponential",
                        "matern",
                        "multiquadric",
                        "inverse-multiquadric",
                        "wendland",
                    ]
                },
                "gamma": {"type": "number"},
                "nu": {"type": "number"},
                "ell": {"type": "number"},
                "beta": {"type": "number"},
                "c": {"type": "number"},
                "smoothness_index": {"type": "integer"},
                "radius": {"type": "number"},
            },
            "required": ["family"],
        },
        "mean": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["constant", "affine"]},
                "value": {"type": "number"},
                "slope": {"type": "array", "items": {"type": "number"}},
                "offset": {"type": "number"},
            },
            "required": ["kind"],
        },
        "transform": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["identity", "square", "exponential"]},
                "alpha": {"type": ["number", "null"]},
            },
            "required": ["kind"],
        },
        "integrand": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["synthetic", "builtin"]},
                "centers": {"type": "array"},
                "weights": {"type": "array", "items": {"type": "number"}},
                "name": {"enum": ["two-bumps", "left-cluster"]},
            },
            "required": ["kind"],
        },
        "pi": _DENSITY_SCHEMA,
        "acquisition": {
            "type": "object",
            "properties": {
                "outer": {
                    "type": "object",
                    "properties": {
                        "kind": {"enum": ["power", "expm1"]},
                        "delta": {"type": "number"},
                    },
                    "required": ["kind"],
                },
                "q": _DENSITY_SCHEMA,
                "b": {
                    "type": "object",
                    "properties": {
                        "kind": {
                            "enum": ["constant", "wsabi_l", "wsabi_m", "mmlt", "vbmc"]
                        },
                        "value": {"type": "number"},
                        "delta2": {"type": "number"},
                        "delta3": {"type": "number"},
                        "density": _DENSITY_SCHEMA,
                    },
                    "required": ["kind"],
                },
                "gamma_tilde": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
            "required": ["outer", "q", "b", "gamma_tilde"],
        },
        "selector": {
            "type": "object",
            "properties": {
                "candidate_count": {"type": "integer", "minimum": 2},
                "scheme": {
                    "enum": ["uniform-grid", "low-discrepancy", "uniform-random"]
                },
                "local_refinement_steps": {"type": "integer", "minimum": 0},
            },
        },
        "budget": {"type": "integer", "minimum": 0},
        "grids": {
            "type": "object",
            "properties": {
                "certificate": {"type": "integer", "minimum": 16},
                "oracle": {"type": "integer", "minimum": 8},
                "shared_certificate": {"type": "boolean"},
            },
        },
        "output_dir": {"type": "string"},
        "matrix": {
            "type": "object",
            "additionalProperties": {"type": "array", "minItems": 1},
        },
    },
    "required": [
        "version", "seed", "domain", "kernel", "mean", "transform",
        "integrand", "pi", "acquisition", "budget",
    ],
}

_BUILTIN_INTEGRANDS = {
    # relative center positions and raw weights, scaled to the domain
    "two-bumps": ([[0.25], [0.7]], [0.5, -0.3]),
    "left-cluster": ([[0.12], [0.28]], [1.5, 1.0]),
}


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(raw)
    return raw


def validate_config(raw):
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {path}: {exc.message}") from exc


def expand_matrix(raw):
    """Cartesian expansion of the optional matrix block into flat configs."""
    matrix = raw.get("matrix")
    if not matrix:
        return [("", raw)]
    keys = sorted(matrix)
    combos = []
    for values in itertools.product(*(matrix[k] for k in keys)):
        cfg = copy.deepcopy(raw)
        cfg.pop("matrix", None)
        tags = []
        for key, value in zip(keys, values):
            _set_dotted(cfg, key, value)
            tags.append(f"{key.split('.')[-1]}={value}")
        combos.append(("__".join(tags), cfg))
    return combos


def _set_dotted(cfg, dotted, value):
    node = cfg
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def build_domain(raw):
    return Domain(tuple(raw["domain"]["lower"]), tuple(raw["domain"]["upper"]))


def build_kernel(raw):
    spec = raw["kernel"]
    family = spec["family"]
    if family == "squared-exponential":
        return kernels.SquaredExponential(spec.get("gamma", 1.0))
    if family == "matern":
        return kernels.Matern(spec.get("nu", 1.5), spec.get("ell", 1.0))
    if family == "multiquadric":
        return kernels.Multiquadric(spec.get("beta", 0.5), spec.get("c", 1.0))
    if family == "inverse-multiquadric":
        return kernels.InverseMultiquadric(spec.get("beta", 0.5), spec.get("c", 1.0))
    return kernels.Wendland(spec.get("smoothness_index", 1), spec.get("radius", 1.0))


def build_mean(raw, dom):
    spec = raw["mean"]
    if spec["kind"] == "constant":
        return ConstantMean(spec.get("value", 0.0))
    slope = spec.get("slope", [0.0] * dom.dim)
    return AffineMean(tuple(slope), spec.get("offset", 0.0))


def build_density(spec, dom):
    kind = spec["kind"]
    if kind == "uniform":
        return UniformDensity(dom)
    if kind == "truncated-gaussian":
        center = spec.get("center", [(a + b) / 2 for a, b in zip(dom.lower, dom.upper)])
        scale = spec.get("scale", [(b - a) / 3 for a, b in zip(dom.lower, dom.upper)])
        return TruncatedGaussianDensity(dom, center, scale)
    values = np.asarray(spec["values"], dtype=float)
    return TabulatedDensity(dom, values)


def _integrand_geometry(raw, dom):
    spec = raw["integrand"]
    if spec["kind"] == "synthetic":
        return np.asarray(spec["centers"], dtype=float), np.asarray(
            spec["weights"], dtype=float
        )
    rel, weights = _BUILTIN_INTEGRANDS[spec["name"]]
    lo = np.asarray(dom.lower)
    widths = dom.widths
    rel = np.asarray(rel, dtype=float)
    if rel.shape[1] != dom.dim:
        rel = np.repeat(rel, dom.dim, axis=1)
    centers = lo + rel * widths
    return centers, np.asarray(weights, dtype=float)


def build_transform(raw, latent_min_sq=None):
    spec = raw["transform"]
    kind = spec["kind"]
    if kind == "identity":
        return transforms.Identity()
    if kind == "exponential":
        return transforms.Exponential()
    alpha = spec.get("alpha")
    if alpha is None:
        # alpha = 0.8 * min f, solved for f = alpha + y^2/2: alpha = 4 min(y^2/2)
        if latent_min_sq is None or latent_min_sq <= 0:
            raise ConfigError(
                "square transform needs an explicit alpha when the latent "
                "function is not bounded away from zero"
            )
        alpha = 4.0 * latent_min_sq
    return transforms.Square(alpha=float(alpha))


def build_problem(raw):
    """Resolve a flat (matrix-expanded) config into runnable objects."""
    dom = build_domain(raw)
    kernel = build_kernel(raw)
    mean = build_mean(raw, dom)
    centers, weights = _integrand_geometry(raw, dom)

    latent_min_sq = None
    if raw["transform"]["kind"] == "square" and raw["transform"].get("alpha") is None:
        probe = dom.uniform_grid(max(512 // dom.dim, 64))
        stub = SyntheticIntegrand(centers=centers, weights=weights, prior_mean=mean,
                                  kernel=kernel, transform=transforms.Identity())
        latent = stub.latent(probe)
        # a latent that crosses (or grazes) zero has no usable positive floor
        if float(np.min(latent)) <= 0.0 <= float(np.max(latent)):
            latent_min_sq = 0.0
        else:
            latent_min_sq = float(np.min(0.5 * latent ** 2))
    transform = build_transform(raw, latent_min_sq)

    integrand = SyntheticIntegrand(centers=centers, weights=weights,
                                   prior_mean=mean, kernel=kernel,
                                   transform=transform)
    pi = build_density(raw["pi"], dom)
    acq_raw = raw["acquisition"]
    outer_raw = acq_raw["outer"]
    outer = (acquisition.Power(outer_raw.get("delta", 1.0))
             if outer_raw["kind"] == "power" else acquisition.Expm1())
    q = build_density(acq_raw["q"], dom)
    b = _build_rule(acq_raw["b"], dom)
    try:
        spec = acquisition.AcquisitionSpec(
            outer=outer, q=q, b=b, gamma_tilde=acq_raw["gamma_tilde"]
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sel_raw = raw.get("selector", {})
    selector = SelectorConfig(
        candidate_count=sel_raw.get("candidate_count", 512),
        candidate_scheme=sel_raw.get("scheme", "uniform-grid"),
        local_refinement_steps=sel_raw.get("local_refinement_steps", 0),
        seed=raw["seed"],
    )
    problem = Problem(integrand=integrand, pi=pi, domain=dom, transform=transform)
    return problem, spec, selector


def _build_rule(spec, dom):
    kind = spec["kind"]
    if kind == "constant":
        return acquisition.ConstantRule(spec.get("value", 1.0))
    if kind == "wsabi_l":
        return acquisition.WsabiL()
    if kind == "wsabi_m":
        return acquisition.WsabiM()
    if kind == "mmlt":
        return acquisition.Mmlt()
    density = build_density(spec.get("density", {"kind": "uniform"}), dom)
    return acquisition.Vbmc(densities=(density,), delta2=spec.get("delta2", 1.0),
                            delta3=spec.get("delta3", 1.0))
