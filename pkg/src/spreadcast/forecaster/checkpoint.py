"""Model checkpoints: one ``.npz`` holding the config as JSON plus every array.

Archive members carry a fixed timestamp so identical parameters always
produce byte-identical files.
"""

from __future__ import annotations

import json
import zipfile
from pathlib import Path

import numpy as np

from .model import ModelConfig, ModelParams, check_params

FORMAT = "spreadcast-checkpoint"
VERSION = 1
_META = "__meta__"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_checkpoint(params: ModelParams, path) -> Path:
    path = Path(path)
    meta = json.dumps({"format": FORMAT, "version": VERSION, "config": params.config.to_dict()}, sort_keys=True)
    members = {_META: np.array(meta), **params.arrays}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in members.items():
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.asarray(arr), allow_pickle=False)
    return path


def load_checkpoint(path) -> ModelParams:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data[_META]))
        if meta.get("format") != FORMAT:
            raise ValueError(f"{path}: not a {FORMAT} file")
        if meta.get("version") != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        arrays = {k: data[k].copy() for k in data.files if k != _META}
    params = ModelParams(ModelConfig(**meta["config"]), arrays)
    check_params(params)
    return params
