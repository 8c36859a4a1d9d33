"""JSON experiment configuration.

Schema (all matrices row-major lists of lists)::

    {
      "model": {"chain": {"n": 2, "m": [...], "q": [[...]], "kappa": [...]}}
             | {"builder": "stable1d", "n_grid": 41, "alpha": 1.0, "radius": 1.0, "scale": 1.0},
      "weight": {"V": [...], "F": [[...]]},            # optional, zero if absent
      "observable": {"Vp": [...], "G": [[...]]},       # optional, clock observable if absent
      "experiments": [
        {"kind": "spectral"},
        {"kind": "qlimits", "t": [10, 20, 40, 80]},
        {"kind": "second_moments", "t": [10, 20, 40, 80]},
        {"kind": "ldp", "theta_grid": [...], "gamma": [...]},
        {"kind": "mc", "t": 40, "n_paths": 100000, "targets": [0, 1]},
        {"kind": "tail", "gamma": 0.5, "t": 30, "theta_tilt": -1, "n_paths": 100000, "x": 0}
      ],
      "seed": 42,
      "output_dir": "out"
    }

``targets`` are start states.  ``weight`` and ``observable`` may also be
given for stable1d models; vectors must have length ``n_grid``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .model import FkWeight, Observable, SymmetricChain, build_discrete_stable

MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path


EXPERIMENT_FIELDS = {
    "spectral": {},
    "qlimits": {"t": "times"},
    "second_moments": {"t": "times"},
    "ldp": {"theta_grid": "reals", "gamma": "reals"},
    "mc": {"t": "positive", "n_paths": "count", "targets": "states"},
    "tail": {"gamma": "real", "t": "positive", "theta_tilt": "nonpositive", "n_paths": "count", "x": "state"},
}
OPTIONAL_FIELDS = {"tail": {"x": 0}}


def _real(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(v).__name__}")
    if not np.isfinite(v):
        raise ConfigError(path, "must be finite")
    return float(v)


def _int(v, path):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {type(v).__name__}")
    return v


def _vector(v, n, path):
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list")
    out = [_real(x, f"{path}[{i}]") for i, x in enumerate(v)]
    if n is not None and len(out) != n:
        raise ConfigError(path, f"expected length {n}, got {len(out)}")
    return out


def _matrix(v, n, path):
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of rows")
    rows = [_vector(r, n, f"{path}[{i}]") for i, r in enumerate(v)]
    if n is not None and len(rows) != n:
        raise ConfigError(path, f"expected {n} rows, got {len(rows)}")
    return rows


def _check_keys(d, allowed, path, required=()):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown field")
    for k in required:
        if k not in d:
            raise ConfigError(f"{path}.{k}" if path else k, "missing required field")


def _experiment(d, n, path):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(path, "experiment needs a 'kind'")
    kind = d["kind"]
    if kind not in EXPERIMENT_FIELDS:
        raise ConfigError(f"{path}.kind", f"unknown experiment kind {kind!r}")
    schema = EXPERIMENT_FIELDS[kind]
    optional = OPTIONAL_FIELDS.get(kind, {})
    _check_keys(d, {"kind", *schema}, path, required=[k for k in schema if k not in optional])
    out = {"kind": kind}
    for name, typ in schema.items():
        p = f"{path}.{name}"
        v = d.get(name, optional.get(name))
        if typ in ("times", "reals"):
            vals = _vector(v, None, p)
            if not vals:
                raise ConfigError(p, "must be nonempty")
            if typ == "times" and any(x <= 0 for x in vals):
                raise ConfigError(p, "times must be positive")
            out[name] = vals
        elif typ == "real":
            out[name] = _real(v, p)
        elif typ == "positive":
            out[name] = _real(v, p)
            if out[name] <= 0:
                raise ConfigError(p, "must be positive")
        elif typ == "nonpositive":
            out[name] = _real(v, p)
            if out[name] > 0:
                raise ConfigError(p, "must be <= 0")
        elif typ == "count":
            out[name] = _int(v, p)
            if out[name] < 1:
                raise ConfigError(p, "must be at least 1")
        elif typ == "state":
            out[name] = _int(v, p)
            if not 0 <= out[name] < n:
                raise ConfigError(p, f"state must lie in 0..{n - 1}")
        elif typ == "states":
            if not isinstance(v, list) or not v:
                raise ConfigError(p, "expected a nonempty list of states")
            out[name] = [_int(x, f"{p}[{i}]") for i, x in enumerate(v)]
            for i, x in enumerate(out[name]):
                if not 0 <= x < n:
                    raise ConfigError(f"{p}[{i}]", f"state must lie in 0..{n - 1}")
    if kind == "ldp":
        grid = out["theta_grid"]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"{path}.theta_grid", "must be strictly increasing")
        if max(grid) > 0:
            raise ConfigError(f"{path}.theta_grid", "must be <= 0")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    weight: dict | None
    observable: dict | None
    experiments: list = field(default_factory=list)
    seed: int = 0
    output_dir: str = "out"

    @property
    def n(self) -> int:
        if "chain" in self.model:
            return self.model["chain"]["n"]
        return self.model["n_grid"]

    def chain(self) -> SymmetricChain:
        if "chain" in self.model:
            c = self.model["chain"]
            return SymmetricChain(c["m"], c["q"], c["kappa"])
        return build_discrete_stable(self.model["n_grid"], self.model["alpha"],
                                     self.model["radius"], self.model["scale"])

    def fk_weight(self) -> FkWeight:
        if self.weight is None:
            return FkWeight.zero(self.n)
        return FkWeight(self.weight["V"], self.weight["F"])

    def obs(self) -> Observable:
        if self.observable is None:
            return Observable.clock(self.n)
        return Observable(self.observable["Vp"], self.observable["G"])

    def to_dict(self) -> dict:
        d = {"model": self.model, "experiments": self.experiments, "seed": self.seed, "output_dir": self.output_dir}
        if self.weight is not None:
            d["weight"] = self.weight
        if self.observable is not None:
            d["observable"] = self.observable
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def with_overrides(self, seed=None, output_dir=None) -> "ExperimentConfig":
        return ExperimentConfig(
            self.model, self.weight, self.observable, self.experiments,
            self.seed if seed is None else seed,
            self.output_dir if output_dir is None else str(output_dir),
        )


def _model(d):
    _check_keys(d, {"chain", "builder", "n_grid", "alpha", "radius", "scale"}, "model")
    has_chain = "chain" in d
    has_builder = "builder" in d
    if has_chain == has_builder:
        raise ConfigError("model", "exactly one of 'chain' or 'builder' is required")
    if has_chain:
        if set(d) != {"chain"}:
            raise ConfigError("model", "builder parameters given alongside an explicit chain")
        c = d["chain"]
        _check_keys(c, {"n", "m", "q", "kappa"}, "model.chain", required=("m", "q", "kappa"))
        if "n" in c:
            n = _int(c["n"], "model.chain.n")
        elif isinstance(c["m"], list):
            n = len(c["m"])
        else:
            raise ConfigError("model.chain.m", "expected a list")
        if n < 1:
            raise ConfigError("model.chain.n", "must be positive")
        return {"chain": {
            "n": n,
            "m": _vector(c["m"], n, "model.chain.m"),
            "q": _matrix(c["q"], n, "model.chain.q"),
            "kappa": _vector(c["kappa"], n, "model.chain.kappa"),
        }}
    if d["builder"] != "stable1d":
        raise ConfigError("model.builder", f"unknown builder {d['builder']!r}")
    _check_keys(d, {"builder", "n_grid", "alpha", "radius", "scale"}, "model", required=("n_grid", "alpha"))
    n_grid = _int(d["n_grid"], "model.n_grid")
    if n_grid < 3:
        raise ConfigError("model.n_grid", "must be at least 3")
    alpha = _real(d["alpha"], "model.alpha")
    if not 0 < alpha < 2:
        raise ConfigError("model.alpha", "must lie in (0, 2)")
    radius = _real(d.get("radius", 1.0), "model.radius")
    scale = _real(d.get("scale", 1.0), "model.scale")
    if radius <= 0:
        raise ConfigError("model.radius", "must be positive")
    if scale <= 0:
        raise ConfigError("model.scale", "must be positive")
    return {"builder": "stable1d", "n_grid": n_grid, "alpha": alpha, "radius": radius, "scale": scale}


def parse_config(d: dict) -> ExperimentConfig:
    """Validate a decoded JSON object; raises ConfigError naming the offending field."""
    _check_keys(d, {"model", "weight", "observable", "experiments", "seed", "output_dir"}, "", required=("model",))
    model = _model(d["model"])
    n = model["chain"]["n"] if "chain" in model else model["n_grid"]
    weight = None
    if d.get("weight") is not None:
        _check_keys(d["weight"], {"V", "F"}, "weight", required=("V", "F"))
        weight = {"V": _vector(d["weight"]["V"], n, "weight.V"), "F": _matrix(d["weight"]["F"], n, "weight.F")}
    obs = None
    if d.get("observable") is not None:
        _check_keys(d["observable"], {"Vp", "G"}, "observable", required=("Vp", "G"))
        obs = {"Vp": _vector(d["observable"]["Vp"], n, "observable.Vp"),
               "G": _matrix(d["observable"]["G"], n, "observable.G")}
    exps = d.get("experiments", [])
    if not isinstance(exps, list):
        raise ConfigError("experiments", "expected a list")
    experiments = [_experiment(e, n, f"experiments[{i}]") for i, e in enumerate(exps)]
    seed = _int(d.get("seed", 0), "seed")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    out = d.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("output_dir", "expected a string")
    return ExperimentConfig(model, weight, obs, experiments, seed, out)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw)


def dump_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def golden2_config(**overrides) -> dict:
    """Raw config dict for the two-state reference chain."""
    d = {
        "model": {"chain": {"n": 2, "m": [1.0, 1.0], "q": [[0.0, 1.0], [1.0, 0.0]], "kappa": [1.0, 0.0]}},
        "experiments": [{"kind": "spectral"}],
        "seed": 42,
        "output_dir": "out",
    }
    d.update(overrides)
    return d
