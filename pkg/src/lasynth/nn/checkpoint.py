"""Versioned checkpoint files: named parameter tensors, optimizer state, config hash."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import torch

CHECKPOINT_VERSION = 1


class CheckpointMismatch(ValueError):
    pass


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def save_checkpoint(path, model, config: dict, optimizer=None, extra=None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "config": config,
            "config_hash": config_hash(config),
            "params": {k: v.detach().cpu() for k, v in model.state_dict().items()},
            "optim": optimizer.state_dict() if optimizer is not None else None,
            "extra": extra or {},
        },
        path,
    )


def load_checkpoint(path) -> dict:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob.get("version") != CHECKPOINT_VERSION:
        raise CheckpointMismatch(f"checkpoint version {blob.get('version')!r}")
    if config_hash(blob["config"]) != blob["config_hash"]:
        raise CheckpointMismatch("config hash does not match stored config")
    return blob
