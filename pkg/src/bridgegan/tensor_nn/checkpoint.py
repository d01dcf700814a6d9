"""ckpt-v1: a JSON object of named arrays (shape + flat row-major data)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

VERSION = "ckpt-v1"


class BadCheckpoint(ValueError):
    pass


def dump_checkpoint(arrays: Mapping[str, np.ndarray], meta: Mapping | None = None) -> dict:
    layers = {}
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise BadCheckpoint(f"non-finite values in {name}")
        layers[name] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    return {"version": VERSION, "meta": dict(meta or {}), "layers": layers}


def save_checkpoint(path: str | Path, arrays: Mapping[str, np.ndarray], meta: Mapping | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(dump_checkpoint(arrays, meta), sort_keys=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
    return path


def parse_checkpoint(obj) -> tuple[dict[str, np.ndarray], dict]:
    if not isinstance(obj, dict) or obj.get("version") != VERSION:
        raise BadCheckpoint(f"not a {VERSION} checkpoint")
    layers = obj.get("layers")
    if not isinstance(layers, dict):
        raise BadCheckpoint("missing layers")
    out = {}
    for name, rec in layers.items():
        try:
            shape = tuple(int(s) for s in rec["shape"])
            data = np.asarray(rec["data"], dtype=float)
            out[name] = data.reshape(shape)
        except (KeyError, TypeError, ValueError) as exc:
            raise BadCheckpoint(f"layer {name!r}: {exc}") from exc
    return out, dict(obj.get("meta") or {})


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadCheckpoint(f"cannot read {path}: {exc}") from exc
    return parse_checkpoint(obj)
