"""Experiment configuration: one JSON document per run.

Defaults live here; a user config file is deep-merged over them and CLI
flags override individual fields. Seeds are always explicit (no
wall-clock entropy), so a config file pins a run exactly; the resolved
document's hash is recorded next to every result.
"""

import copy
import hashlib
import json
import math

from .errors import ConfigError

__all__ = ["EXPERIMENTS", "default_config", "load_config", "resolve_config",
           "config_hash"]

EXPERIMENTS = ("toy_dim", "lie_check", "estimate_dim", "local_spectrum",
               "train_stats", "reachability")

_DEFAULTS = {
    "toy_dim": {
        "experiment": "toy_dim",
        "seed": 2024,
        "output": "out/toy_dim",
        "system": {"name": "chain_integrator", "parameters": {}},
        "policy": {"n": 1024, "r": 1.0, "seed": 7, "zero_base": False},
        "sweep": {"d_s": [3, 4, 5, 6, 7, 8, 9, 10]},
        "sampling": {"num_policies": 200, "delta": 5.0, "dt_sample": 0.01,
                     "substeps": 1},
        "estimator": {"subsamples": 10, "subsample_size": 40000,
                      "trim_fraction": 0.0},
        "full_scale": False,
        "full_num_policies": 1000,
    },
    "local_spectrum": {
        "experiment": "local_spectrum",
        "seed": 2024,
        "output": "out/local_spectrum",
        "system": {"name": "pendulum", "parameters": {"links": 2, "coupling": 1.0}},
        "policy": {"n": 1024, "r": 1.0, "seed": 7, "zero_base": False},
        "base_state": None,  # pendulum default: inverted equilibrium
        "sampling": {"num_policies": 2000, "deltas": [0.01, 0.02, 0.05, 0.1],
                     "samples_per_policy": 50, "max_dt": 0.001},
        "mode": "sampled",
        "train": None,  # used when mode == "trained"
        "tau": 0.5,
        "num_seeds": 16,
    },
    "lie_check": {
        "experiment": "lie_check",
        "seed": 2024,
        "output": "out/lie_check",
        "system": {"name": "pendulum", "parameters": {"links": 2, "coupling": 1.0}},
        "policy": {"n": 1024, "r": 1.0, "seed": 7, "zero_base": False},
        "base_state": [0.9, -0.6, 0.3, -0.2],
        "num_policies": 20,
        "t_grid": {"start": 0.01, "stop": 0.32, "count": 8},
        "dt_ref": 1e-4,
    },
    "train_stats": {
        "experiment": "train_stats",
        "seed": 2024,
        "output": "out/train_stats",
        "system": {"name": "chain_integrator",
                   "parameters": {"d_s": 1, "reward": "neg_sq_norm",
                                  "horizon": 1.0, "discount": 1.0}},
        "widths": [256, 4096],
        "num_seeds": 16,
        "tau": 0.5,
        "shared_init": True,
        "train": {"eta0": 0.5, "batch": 2, "fd_step": 1e-3, "h_window": 0.1,
                  "dt": 0.02, "exploration_scale": 0.1,
                  "start_state": [1.0], "probe_states": [[0.8]]},
    },
    "estimate_dim": {
        "experiment": "estimate_dim",
        "seed": 2024,
        "output": "out/estimate_dim",
        "csv_path": None,
        "estimator": {"subsamples": 10, "subsample_size": 5000,
                      "trim_fraction": 0.0},
    },
    "reachability": {
        "experiment": "reachability",
        "seed": 2024,
        "output": "out/reachability",
        "system": {"name": "chain_integrator", "parameters": {"d_s": 10}},
        "matrices": None,  # {"A": ..., "B": ...} overrides the catalog system
        "tol": 1e-10,
    },
}


def default_config(experiment):
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"choose from {EXPERIMENTS}")
    return copy.deepcopy(_DEFAULTS[experiment])


def _merge(base, override, path=""):
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            _merge(base[key], val, path + key + ".")
        else:
            base[key] = val
    return base


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return doc


def resolve_config(experiment, file_doc=None, seed=None, output=None,
                   full=None, csv_path=None):
    """Defaults <- file <- flags; returns the resolved plain dict."""
    cfg = default_config(experiment)
    if file_doc:
        doc = dict(file_doc)
        doc_experiment = doc.pop("experiment", experiment)
        if doc_experiment != experiment:
            raise ConfigError(
                f"config is for experiment {doc_experiment!r}, not {experiment!r}")
        _merge(cfg, doc)
    if seed is not None:
        cfg["seed"] = int(seed)
    if output is not None:
        cfg["output"] = output
    if full is not None and "full_scale" in cfg:
        cfg["full_scale"] = bool(full)
    if csv_path is not None and "csv_path" in cfg:
        cfg["csv_path"] = csv_path
    _validate(cfg)
    return cfg


def _require_positive(cfg, path, allow_zero=False):
    node = cfg
    for part in path.split(".")[:-1]:
        node = node[part]
    val = node[path.split(".")[-1]]
    if not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{path} must be a finite number, got {val!r}")
    if val < 0 or (val == 0 and not allow_zero):
        raise ConfigError(f"{path} must be positive, got {val!r}")


def _validate(cfg):
    exp = cfg["experiment"]
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if exp == "toy_dim":
        sweep = cfg["sweep"]["d_s"]
        if not sweep or any(int(d) < 1 for d in sweep):
            raise ConfigError("sweep.d_s must list positive dimensions")
        _require_positive(cfg, "sampling.num_policies")
        _require_positive(cfg, "sampling.delta")
        _require_positive(cfg, "sampling.dt_sample")
        _require_positive(cfg, "estimator.subsamples")
        _require_positive(cfg, "estimator.subsample_size")
        n_samples = cfg["sampling"]["delta"] / cfg["sampling"]["dt_sample"]
        if abs(n_samples - round(n_samples)) > 1e-9:
            raise ConfigError("sampling.dt_sample must divide sampling.delta")
    elif exp == "local_spectrum":
        if cfg["mode"] not in ("sampled", "trained"):
            raise ConfigError("mode must be 'sampled' or 'trained'")
        deltas = cfg["sampling"]["deltas"]
        if not deltas or any(d <= 0 for d in deltas):
            raise ConfigError("sampling.deltas must be positive")
        if sorted(deltas) != list(deltas):
            raise ConfigError("sampling.deltas must be increasing")
        _require_positive(cfg, "sampling.num_policies")
        _require_positive(cfg, "sampling.samples_per_policy")
    elif exp == "lie_check":
        grid = cfg["t_grid"]
        if grid["start"] <= 0 or grid["stop"] <= grid["start"]:
            raise ConfigError("t_grid must satisfy 0 < start < stop")
        if int(grid["count"]) < 3:
            raise ConfigError("t_grid.count must be at least 3")
        _require_positive(cfg, "num_policies")
        if cfg["base_state"] is None:
            raise ConfigError("lie_check needs a base_state")
    elif exp == "train_stats":
        if len(cfg["widths"]) < 2:
            raise ConfigError("train_stats needs at least two widths")
        _require_positive(cfg, "num_seeds")
        _require_positive(cfg, "tau")
        if not cfg["train"]["probe_states"]:
            raise ConfigError("train.probe_states must be nonempty")
    elif exp == "estimate_dim":
        if not cfg["csv_path"]:
            raise ConfigError("estimate_dim needs csv_path")
        _require_positive(cfg, "estimator.subsamples")
        _require_positive(cfg, "estimator.subsample_size")
    elif exp == "reachability":
        _require_positive(cfg, "tol")


def config_hash(cfg):
    """sha256 of the canonical JSON form of the resolved config."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
