"""Experiment configuration: defaults, file loading, flag overrides and validation.

A configuration is a nested mapping with the blocks ``lattice``, ``pattern``,
``dynamics``, ``mode``, ``sweep``, ``output`` and ``options``. Files may be
YAML or JSON. Command-line flags are stored under dotted keys
(``"lattice.nx"``) and override file values.

Complex numbers are written as ``[re, im]`` pairs; the dipole accepts a name
("circular", "x", "y", "z") or three such entries. Waists are given in units
of the lattice spacing d.
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import InvalidInputError
from .lattice import CIRCULAR, REALNESS_TOL, DetuningPattern, preset_pattern

EXPERIMENTS = ("bands", "disperse", "store", "retrieve", "shape", "spectrum",
               "sidebands", "steer", "rabi", "cycle", "defects")

BASE_DEFAULTS = {
    "lattice": {"nx": 21, "ny": 21, "spacing": 0.3, "dipole": "circular", "defects": []},
    "pattern": {"kind": "checkerboard", "params": [2.0]},
    "dynamics": {"dt": 0.01, "t_end": 10.0, "t_storage": 0.0},
    "mode": {"waist": 5.0, "polarization": "dipole"},
    "sweep": {"parameter": None, "values": []},
    "output": {"dir": "results"},
    "options": {},
}

EXPERIMENT_DEFAULTS = {
    "bands": {"lattice": {"spacing": 0.2},
              "options": {"path": "M',G,X',M'", "samples": 50, "radius": None, "Delta": 0.0, "folded": False}},
    "disperse": {"options": {"points": ["G", "X", "M"], "radius": None, "window": "smooth"}},
    "store": {},
    "retrieve": {"options": {"Delta_store": None}},
    "shape": {"lattice": {"spacing": 0.2}, "mode": {"waist": 6.0},
              "dynamics": {"dt": 0.002, "t_end": 10.0},
              "options": {"window": "blackman", "taper": 0.5, "total": 1.0, "on_lattice": False, "solver_dt": 0.001,
                          "plateau": 0.5, "cap": 20.0}},
    "spectrum": {"options": {"omega": [-15.0, 15.0, 0.01], "dt": None}},
    "sidebands": {"options": {"omega": [-30.0, 30.0, 0.01], "delta_mod": 1.0, "Omega_mod": 2.0, "dt": None}},
    "steer": {"lattice": {"nx": 41, "ny": 41}, "mode": {"waist": 12.0},
              "pattern": {"kind": "period3_x", "params": [0.0, 0.5]},
              "options": {"theta_step": 0.25, "Delta_store": 2.0}},
    "rabi": {"mode": {"waist": 6.0}, "pattern": {"kind": "stripe_y", "params": [5.0]},
             "dynamics": {"t_end": 8.0}, "options": {"stride": 2, "Delta_store": 2.0}},
    "cycle": {"lattice": {"nx": 61, "ny": 61}, "mode": {"waist": 16.0},
              "dynamics": {"dt": 0.005, "t_end": 3.0},
              "options": {"n_states": 4, "amplitude": 5.0, "direction": 1, "stride": 4, "radius": 0.3}},
    "defects": {"mode": {"waist": 4.0}, "options": {"sets": None, "waists": [3, 4, 5, 6, 7]}},
}

# blocks each experiment reads; validation requires them to be present
REQUIRED_BLOCKS = {
    "bands": ("lattice", "options"),
    "disperse": ("lattice", "options"),
    "store": ("lattice", "pattern", "mode"),
    "retrieve": ("lattice", "pattern", "dynamics", "mode"),
    "shape": ("lattice", "dynamics", "mode", "options"),
    "spectrum": ("lattice", "pattern", "mode", "options"),
    "sidebands": ("lattice", "pattern", "mode", "options"),
    "steer": ("lattice", "pattern", "mode", "options"),
    "rabi": ("lattice", "pattern", "dynamics", "mode"),
    "cycle": ("lattice", "dynamics", "mode", "options"),
    "defects": ("lattice", "mode", "options"),
}

_NAMED_DIPOLES = {"circular": CIRCULAR, "x": np.array([1, 0, 0]), "y": np.array([0, 1, 0]),
                  "z": np.array([0, 0, 1])}


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (extra or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def set_dotted(cfg: dict, key: str, value) -> None:
    parts = key.split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def get_dotted(cfg: dict, key: str, default=None):
    node = cfg
    for p in key.split("."):
        if not isinstance(node, dict) or p not in node:
            return default
        node = node[p]
    return node


def load_file(path) -> dict:
    """Read a YAML or JSON configuration file (JSON is parsed as YAML)."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) if text.strip() else {}
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: top level must be a mapping")
    return data


def resolve(experiment: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the file, then dotted-key overrides."""
    if experiment not in EXPERIMENTS:
        raise InvalidInputError(f"unknown experiment {experiment!r}")
    file_cfg = dict(file_cfg or {})
    file_cfg.pop("experiment", None)
    cfg = _deep_merge(BASE_DEFAULTS, EXPERIMENT_DEFAULTS.get(experiment, {}))
    cfg = _deep_merge(cfg, file_cfg)
    for key, value in (overrides or {}).items():
        set_dotted(cfg, key, value)
    cfg["experiment"] = experiment
    return cfg


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serialisable: {type(o).__name__}")


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON of the resolved configuration (output dir excluded)."""
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def to_complex(value, key: str) -> complex:
    """Parse a number or an [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidInputError(f"{key} must be a number or an [re, im] pair")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace("i", "j").replace(" ", ""))
    return complex(float(value))


def parse_dipole(value, key: str = "lattice.dipole") -> np.ndarray:
    if isinstance(value, str):
        if value.lower() not in _NAMED_DIPOLES:
            raise InvalidInputError(f"{key}: unknown dipole {value!r}")
        return np.asarray(_NAMED_DIPOLES[value.lower()], dtype=complex)
    vals = list(value)
    if len(vals) == 6 and all(not isinstance(v, (list, tuple)) for v in vals):
        # six reals: re/im of x, y, z
        return np.array([complex(vals[2 * i], vals[2 * i + 1]) for i in range(3)])
    if len(vals) != 3:
        raise InvalidInputError(f"{key} must name a dipole or list three components")
    return np.array([to_complex(v, f"{key}[{i}]") for i, v in enumerate(vals)])


def build_pattern(block: dict, key: str = "pattern") -> DetuningPattern:
    """DetuningPattern from a pattern block (preset kind + params, or explicit components)."""
    kind = block.get("kind")
    if kind == "components":
        comps = {}
        for i, c in enumerate(block.get("components", [])):
            comps[tuple(int(q) for q in c["q"])] = to_complex(c["amplitude"], f"{key}.components[{i}].amplitude")
        return DetuningPattern(comps, tuple(int(p) for p in block.get("period", (1, 1))))
    params = [to_complex(v, f"{key}.params[{i}]") for i, v in enumerate(block.get("params", []))]
    return preset_pattern(kind, *params)


def _pattern_diagnostics(block, key: str) -> list[str]:
    if not isinstance(block, dict):
        return [f"{key} must be a mapping"]
    out = []
    kind = block.get("kind")
    real_slots = {"uniform": (0,), "checkerboard": (0,), "stripe_x": (0,), "stripe_y": (0,),
                  "period3_x": (0,), "period3_y": (0,), "period4_x": (0, 2), "period4_y": (0, 2)}
    if kind != "components" and kind not in real_slots:
        return [f"{key}.kind: unknown pattern kind {kind!r}"]
    try:
        if kind != "components":
            for i in real_slots[kind]:
                params = block.get("params", [])
                if i < len(params) and abs(to_complex(params[i], f"{key}.params[{i}]").imag) > REALNESS_TOL:
                    out.append(f"{key}.params[{i}] must be real for {kind} (realness of the detuning)")
        if not out:
            build_pattern(block, key)
    except (InvalidInputError, ValueError, TypeError, KeyError) as exc:
        msg = str(exc)
        if "realness" in msg or "must be real" in msg:
            out.append(f"{key}: realness violated ({msg})")
        else:
            out.append(f"{key}: {msg}")
    return out


def _positive(cfg, key, out, allow_none=False, integer=False):
    v = get_dotted(cfg, key)
    if v is None and allow_none:
        return
    try:
        x = float(v)
    except (TypeError, ValueError):
        out.append(f"{key} must be a number")
        return
    if not np.isfinite(x) or x <= 0:
        out.append(f"{key} must be positive")
    elif integer and int(x) != x:
        out.append(f"{key} must be an integer")


def validate(cfg: dict) -> list[str]:
    """Diagnostics for a resolved configuration; empty iff the run would be accepted."""
    out: list[str] = []
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        return [f"experiment: unknown experiment {exp!r}"]
    for block in REQUIRED_BLOCKS[exp]:
        if not isinstance(cfg.get(block), dict):
            out.append(f"{block}: block is required for {exp}")
    if out:
        return out

    _positive(cfg, "lattice.spacing", out)
    for k in ("lattice.nx", "lattice.ny"):
        _positive(cfg, k, out, integer=True)
    try:
        d = parse_dipole(get_dotted(cfg, "lattice.dipole"))
        if np.linalg.norm(d) == 0:
            out.append("lattice.dipole must be nonzero")
    except (InvalidInputError, ValueError, TypeError) as exc:
        out.append(f"lattice.dipole: {exc}")
    holes = get_dotted(cfg, "lattice.defects", []) or []
    if not isinstance(holes, list) or any(not isinstance(h, (list, tuple)) or len(h) != 2 for h in holes):
        out.append("lattice.defects must be a list of [x, y] positions in units of d")

    if "dynamics" in REQUIRED_BLOCKS[exp]:
        _positive(cfg, "dynamics.dt", out)
        _positive(cfg, "dynamics.t_end", out)
        ts = get_dotted(cfg, "dynamics.t_storage", 0.0)
        if ts is None or float(ts) < 0:
            out.append("dynamics.t_storage must be non-negative")
    if "mode" in REQUIRED_BLOCKS[exp]:
        _positive(cfg, "mode.waist", out)
    if "pattern" in REQUIRED_BLOCKS[exp]:
        out += _pattern_diagnostics(cfg["pattern"], "pattern")

    sweep = cfg.get("sweep") or {}
    if sweep.get("parameter"):
        vals = sweep.get("values")
        if not isinstance(vals, list) or not vals:
            out.append("sweep.values must be a non-empty list")
        if "." not in str(sweep["parameter"]):
            out.append("sweep.parameter must be a dotted key such as mode.waist")

    opts = cfg.get("options") or {}
    if exp == "bands":
        _positive(cfg, "options.samples", out, integer=True)
        if float(opts.get("Delta") or 0) < 0:
            out.append("options.Delta must be non-negative")
    if exp == "shape":
        from .protocols.shaping import WINDOW_KINDS
        if opts.get("window") not in WINDOW_KINDS:
            out.append(f"options.window must be one of {', '.join(WINDOW_KINDS)}")
        _positive(cfg, "options.solver_dt", out)
    if exp in ("spectrum", "sidebands"):
        om = opts.get("omega")
        if not (isinstance(om, list) and len(om) == 3 and om[1] > om[0] and om[2] > 0):
            out.append("options.omega must be [min, max, step] with max > min and step > 0")
        if get_dotted(cfg, "pattern.kind") != "checkerboard":
            out.append("pattern.kind must be checkerboard for spectra")
    if exp == "sidebands":
        _positive(cfg, "options.Omega_mod", out)
    if exp == "steer" and get_dotted(cfg, "pattern.kind") not in ("period3_x", "period4_x"):
        out.append("pattern.kind must be period3_x or period4_x for steering")
    if exp == "rabi" and get_dotted(cfg, "pattern.kind") != "stripe_y":
        out.append("pattern.kind must be stripe_y for X-M Rabi oscillations")
    if exp == "cycle" and opts.get("n_states") not in (3, 4):
        out.append("options.n_states must be 3 or 4")
    if exp in ("retrieve", "store", "spectrum", "sidebands", "shape", "defects") and not out:
        if float(cfg["lattice"]["spacing"]) >= 1 / np.sqrt(2):
            out.append("lattice.spacing must be below 1/sqrt(2) for a dark band outside the light cone")
    return out


@dataclass
class ExperimentConfig:
    """Resolved configuration; build with :func:`resolve` then :meth:`from_dict`."""

    experiment: str
    lattice: dict
    pattern: dict
    dynamics: dict
    mode: dict
    sweep: dict
    output: dict
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        diags = validate(cfg)
        if diags:
            raise InvalidInputError("; ".join(diags))
        return cls(**{k: copy.deepcopy(cfg.get(k, {})) for k in
                      ("experiment", "lattice", "pattern", "dynamics", "mode", "sweep", "output", "options")})

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "lattice": self.lattice, "pattern": self.pattern,
                "dynamics": self.dynamics, "mode": self.mode, "sweep": self.sweep,
                "output": self.output, "options": self.options}

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def sweep_elements(self) -> list[tuple]:
        """(value, config) for each sweep value, or [(None, self)] without a sweep."""
        param = (self.sweep or {}).get("parameter")
        if not param:
            return [(None, self)]
        out = []
        for v in self.sweep["values"]:
            d = copy.deepcopy(self.to_dict())
            set_dotted(d, param, v)
            d["sweep"] = {"parameter": None, "values": []}
            out.append((v, ExperimentConfig.from_dict(d)))
        return out
