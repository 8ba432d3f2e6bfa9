"""Checkpoint directories: ``index.json`` plus raw little-endian float32 ``weights.bin``."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

WEIGHTS_FILE = "weights.bin"
INDEX_FILE = "index.json"


class CheckpointError(RuntimeError):
    pass


def save_params(params: Mapping[str, torch.Tensor], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {}
    offset = 0
    with open(directory / WEIGHTS_FILE, "wb") as fh:
        for name, t in params.items():
            arr = t.detach().cpu().numpy().astype("<f4")
            if not np.isfinite(arr).all():
                raise CheckpointError(f"parameter '{name}' is not finite")
            fh.write(arr.tobytes(order="C"))
            index[name] = {"shape": list(arr.shape), "dtype": "f32", "offset": offset,
                           "file": WEIGHTS_FILE}
            offset += arr.nbytes
    (directory / INDEX_FILE).write_text(json.dumps(index, indent=1), encoding="utf-8")


def load_params(directory) -> dict[str, torch.Tensor]:
    directory = Path(directory)
    index_path = directory / INDEX_FILE
    if not index_path.is_file():
        raise CheckpointError(f"missing checkpoint index: {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    blobs: dict[str, bytes] = {}
    out = {}
    for name, entry in index.items():
        fname = entry["file"]
        if fname not in blobs:
            path = directory / fname
            if not path.is_file():
                raise CheckpointError(f"missing weights file: {path}")
            blobs[fname] = path.read_bytes()
        if entry["dtype"] != "f32":
            raise CheckpointError(f"parameter '{name}': unsupported dtype {entry['dtype']}")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        raw = blobs[fname][start : start + 4 * count]
        if len(raw) != 4 * count:
            raise CheckpointError(f"parameter '{name}': weights file truncated")
        out[name] = torch.from_numpy(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
    return out


def load_into(module: torch.nn.Module, directory) -> torch.nn.Module:
    """Load a checkpoint into ``module``, requiring an exact name/shape match."""
    params = load_params(directory)
    expected = dict(module.named_parameters())
    missing = sorted(set(expected) - set(params))
    extra = sorted(set(params) - set(expected))
    if missing or extra:
        raise CheckpointError(f"checkpoint {directory} incomplete: missing={missing[:5]} "
                              f"unexpected={extra[:5]}")
    with torch.no_grad():
        for name, p in expected.items():
            if tuple(p.shape) != tuple(params[name].shape):
                raise CheckpointError(f"parameter '{name}': shape {tuple(params[name].shape)} "
                                      f"≠ {tuple(p.shape)}")
            p.copy_(params[name])
    return module
