"""Experiment configuration: one JSON document, CLI flags override keys.

Configs are plain nested dicts merged over DEFAULTS; the canonical hash of
the merged dict is embedded in every artifact so outputs are traceable to
the exact configuration that produced them.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .errors import ValidationFailure

DEFAULTS: dict = {
    "seed": 20240601,
    "out_dir": "runs/default",
    "dataset": {
        "train_images": None,
        "train_labels": None,
        "test_images": None,
        "test_labels": None,
        "train_limit": 5000,
        "test_limit": 1000,
    },
    "model": {"hidden_dim": 128, "depth": 5, "num_classes": 10},
    "training": {"epochs": 40, "batch_size": 256, "lr": 0.02},
    "prune": {"d": "auto", "psi": "auto", "safety": 0.5},
    "budget": {"eps": 20.0, "lam": 20.0, "delta": 0.1, "gamma": None},
    "sketch": {"c_m": 1.0, "degree": None},
    "constants": {
        "latala_C": 1.0,
        "sketch_constant": 1.0,
        "naive_constant": 1.0,
        "p_exponent_c": 2.0,
    },
    "verify": {},
    "sweep_hidden_dims": [],
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ValidationFailure(f"config file not found: {path}")
    try:
        user = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"config is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ValidationFailure("config root must be a JSON object")
    return _merge(DEFAULTS, user)


def default_config() -> dict:
    return copy.deepcopy(DEFAULTS)


def config_hash(cfg: dict) -> str:
    """Hash of the experiment-relevant keys (the output location is not
    part of the experiment's identity)."""
    hashed = {k: v for k, v in cfg.items() if k != "out_dir"}
    canonical = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def apply_overrides(cfg: dict, seed: int | None = None, out_dir: str | None = None,
                    limit: int | None = None) -> dict:
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if out_dir is not None:
        cfg["out_dir"] = out_dir
    if limit is not None:
        cfg["dataset"]["train_limit"] = limit
    return cfg
