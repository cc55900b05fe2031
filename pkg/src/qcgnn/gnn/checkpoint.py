"""Portable checkpoints.

A checkpoint is an uncompressed ``.npz`` archive. Every parameter tensor is
stored as a float64 array under its parameter name (see ``model``), and the
entry ``__meta__`` holds a JSON document::

    {"format": 1, "architecture": ..., "out_dim": ..., "config": {...},
     "normalization": {...} | null, "target_normalization": {...} | null,
     "seed": ..., "training": {...}}

Any reader of ``.npy`` files plus JSON can load it.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import GnnModel, ModelConfig

FORMAT_VERSION = 1
META_KEY = "__meta__"


def save_checkpoint(path, model: GnnModel, normalization=None, target_normalization=None, training=None) -> Path:
    meta = {
        "format": FORMAT_VERSION,
        "architecture": model.config.arch,
        "out_dim": model.config.out_dim,
        "config": model.config.to_dict(),
        "normalization": normalization,
        "target_normalization": target_normalization,
        "seed": model.config.seed,
        "training": training or {},
    }
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in sorted(model.params.items())}
    arrays[META_KEY] = np.array(json.dumps(meta, sort_keys=True))
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path) -> tuple[GnnModel, dict]:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z[META_KEY]))
        if meta.get("format") != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {meta.get('format')}")
        params = {k: z[k].copy() for k in z.files if k != META_KEY}
    cfg = ModelConfig.from_dict(meta["config"])
    ref = GnnModel(cfg)
    if set(params) != set(ref.params):
        raise ValueError("checkpoint parameters do not match the architecture")
    for k, v in params.items():
        if v.shape != ref.params[k].shape:
            raise ValueError(f"parameter {k}: shape {v.shape}, expected {ref.params[k].shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError(f"parameter {k} has non-finite entries")
    return GnnModel(cfg, params), meta
