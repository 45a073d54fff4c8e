"""
JSON model files and the shipped scenario presets.

A model file looks like::

    {
      "system": {"energies": [0.0, 1.0]},
      "lambda": 1.0,
      "channels": [
        {"i": 1, "j": 2, "phase_degrees": 0,
         "profile": {"kind": "lorentzian", "params": {"g": 1, "kappa": 5, "mu": 0}}}
      ],
      "shift": [[0, 0], [0, 0], [0, 0], [0, 0]],
      "grid": {"scheme": "gauss_legendre", "n": 400, "omega_max": 50}
    }

``shift`` is row-major ``[re, im]`` pairs, flat or nested by row.  Profile
parameters may also sit directly beside ``kind``.  Unknown keys are errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .model import Channel, Gaussian, LevelSystem, Lorentzian, ModelSpec, Tabulated

__all__ = ["ModelFileError", "GridConfig", "parse_model", "load_model", "model_to_dict",
           "dump_model", "PRESETS", "preset"]


class ModelFileError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    scheme: str = "gauss_legendre"
    n: int | None = None
    omega_max: float | None = None


_PROFILES = {
    "lorentzian": (Lorentzian, {"g", "kappa"}, {"mu"}),
    "gaussian": (Gaussian, {"g", "sigma"}, {"mu"}),
    "tabulated": (Tabulated, {"nodes", "values"}, set()),
}


def _require(obj, key, where):
    if key not in obj:
        raise ModelFileError(f"missing key '{key}' in {where}")
    return obj[key]


def _reject_unknown(obj, allowed, where):
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ModelFileError(f"unknown key(s) {', '.join(map(repr, extra))} in {where}")


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ModelFileError(f"{where} must be a number")
    return float(x)


def _index(x, where):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ModelFileError(f"{where} must be an integer")
    return x


def _profile(obj, where):
    if not isinstance(obj, dict):
        raise ModelFileError(f"{where} must be an object")
    kind = str(_require(obj, "kind", where)).lower()
    if kind not in _PROFILES:
        raise ModelFileError(f"{where}: unknown profile kind {kind!r}")
    cls, required, optional = _PROFILES[kind]
    if "params" in obj:
        _reject_unknown(obj, {"kind", "params"}, where)
        params = obj["params"]
        if not isinstance(params, dict):
            raise ModelFileError(f"{where}.params must be an object")
    else:
        params = {k: v for k, v in obj.items() if k != "kind"}
    pwhere = f"{where}.params"
    _reject_unknown(params, required | optional, pwhere)
    for key in sorted(required):
        _require(params, key, pwhere)
    if kind == "tabulated":
        nodes = [_number(x, f"{pwhere}.nodes[]") for x in params["nodes"]]
        values = [_number(x, f"{pwhere}.values[]") for x in params["values"]]
        return cls(tuple(nodes), tuple(values))
    return cls(**{k: _number(v, f"{pwhere}.{k}") for k, v in params.items()})


def _shift(raw, n):
    flat = raw
    if len(raw) == n and all(isinstance(r, list) and r and isinstance(r[0], list) for r in raw):
        flat = [z for row in raw for z in row]
    if len(flat) != n * n:
        raise ModelFileError(f"shift must have {n * n} [re, im] entries")
    out = np.empty(n * n, dtype=complex)
    for k, z in enumerate(flat):
        if not (isinstance(z, list) and len(z) == 2):
            raise ModelFileError("shift entries must be [re, im] pairs")
        out[k] = complex(_number(z[0], "shift re"), _number(z[1], "shift im"))
    return out.reshape(n, n)


def parse_model(doc: dict):
    """``(ModelSpec, GridConfig | None)`` from a decoded model document."""
    if not isinstance(doc, dict):
        raise ModelFileError("model file must contain a JSON object")
    _reject_unknown(doc, {"system", "lambda", "channels", "shift", "grid"}, "model")
    system = _require(doc, "system", "model")
    if not isinstance(system, dict):
        raise ModelFileError("'system' must be an object")
    _reject_unknown(system, {"energies"}, "system")
    energies = _require(system, "energies", "system")
    if not isinstance(energies, list) or not energies:
        raise ModelFileError("system.energies must be a non-empty array")
    energies = [_number(e, "system.energies[]") for e in energies]
    lam = _number(_require(doc, "lambda", "model"), "lambda")

    channels = []
    for k, c in enumerate(doc.get("channels", [])):
        where = f"channels[{k}]"
        if not isinstance(c, dict):
            raise ModelFileError(f"{where} must be an object")
        _reject_unknown(c, {"i", "j", "profile", "phase_degrees"}, where)
        i = _index(_require(c, "i", where), f"{where}.i")
        j = _index(_require(c, "j", where), f"{where}.j")
        prof = _profile(_require(c, "profile", where), f"{where}.profile")
        phase = _number(c.get("phase_degrees", 0.0), f"{where}.phase_degrees")
        channels.append(Channel(i, j, prof, phase))

    shift = None
    if doc.get("shift") is not None:
        if not isinstance(doc["shift"], list):
            raise ModelFileError("shift must be an array")
        shift = _shift(doc["shift"], len(energies))

    grid = None
    if doc.get("grid") is not None:
        g = doc["grid"]
        if not isinstance(g, dict):
            raise ModelFileError("'grid' must be an object")
        _reject_unknown(g, {"scheme", "n", "omega_max"}, "grid")
        n = g.get("n")
        om = g.get("omega_max")
        grid = GridConfig(str(g.get("scheme", "gauss_legendre")),
                          None if n is None else _index(n, "grid.n"),
                          None if om is None else _number(om, "grid.omega_max"))
    return ModelSpec(LevelSystem(tuple(energies)), lam, tuple(channels), shift), grid


def load_model(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model file {path} is not valid JSON: {exc}") from None
    return parse_model(doc)


def model_to_dict(spec: ModelSpec, grid: GridConfig | None = None) -> dict:
    doc = {"system": {"energies": list(spec.system.energies)}, "lambda": spec.coupling,
           "channels": []}
    for c in spec.channels:
        d = c.profile.to_dict()
        kind = d.pop("kind")
        doc["channels"].append({"i": c.i, "j": c.j, "profile": {"kind": kind, "params": d},
                                "phase_degrees": c.phase_degrees})
    if spec.shift is not None:
        doc["shift"] = [[float(z.real), float(z.imag)] for z in spec.shift.ravel()]
    if grid is not None:
        g = {"scheme": grid.scheme}
        if grid.n is not None:
            g["n"] = grid.n
        if grid.omega_max is not None and math.isfinite(grid.omega_max):
            g["omega_max"] = grid.omega_max
        doc["grid"] = g
    return doc


def dump_model(spec: ModelSpec, grid: GridConfig | None = None) -> str:
    return json.dumps(model_to_dict(spec, grid), indent=1)


# acceptance models, shipped verbatim
PRESETS = {
    "reference-single-level": {
        "system": {"energies": [0.0]},
        "lambda": 1.0,
        "channels": [{"i": 1, "j": 1, "phase_degrees": 0.0,
                      "profile": {"kind": "lorentzian",
                                  "params": {"g": 1.0, "kappa": 5.0, "mu": 0.0}}}],
    },
    "two-level-decay": {
        "system": {"energies": [0.0, 1.0]},
        "lambda": 1.0,
        "channels": [{"i": 1, "j": 2, "phase_degrees": 0.0,
                      "profile": {"kind": "lorentzian",
                                  "params": {"g": 1.0, "kappa": 5.0, "mu": 0.0}}}],
    },
}


def preset(name: str):
    if name not in PRESETS:
        raise ModelFileError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return parse_model(json.loads(json.dumps(PRESETS[name])))
