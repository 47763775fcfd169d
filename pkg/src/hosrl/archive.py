"""Single-file model archive.

Layout::

    SRLARCHIVE <version>\\n
    <header byte count>\\n
    <UTF-8 JSON header: config, vocab, seed, metadata, manifest>
    <raw little-endian float32 arrays>

Each manifest entry gives ``name``, ``shape`` and ``offset`` (bytes from
the start of the array section).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ModelConfig, TrainConfig, config_from_dict, config_to_dict
from .corpus import Vocabulary
from .model import SRLModel

MAGIC = "SRLARCHIVE"
FORMAT_VERSION = 1


class ArchiveError(ValueError):
    """Unreadable or corrupt archive."""


class ArchiveVersionError(ArchiveError):
    """Archive written by an incompatible format version."""


def save_model(path: str | Path, model: SRLModel, train_cfg: TrainConfig | None = None,
               metadata: dict | None = None, version: int = FORMAT_VERSION) -> None:
    manifest, blobs, offset = [], [], 0
    for name, t in model.parameters().items():
        arr = np.ascontiguousarray(t.data, dtype="<f4")
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    header = {
        "model_config": config_to_dict(model.config),
        "train_config": config_to_dict(train_cfg) if train_cfg is not None else None,
        "vocab": model.vocab.to_dict(),
        "seed": model.seed,
        "metadata": metadata or {},
        "manifest": manifest,
    }
    head = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {version}\n{len(head)}\n".encode("ascii"))
        fh.write(head)
        for b in blobs:
            fh.write(b)


def read_header(path: str | Path) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    try:
        first, rest = raw.split(b"\n", 1)
        size_line, rest = rest.split(b"\n", 1)
        magic, version = first.decode("ascii").split(" ")
        size = int(size_line)
    except ValueError:
        raise ArchiveError(f"{path}: not a model archive") from None
    if magic != MAGIC:
        raise ArchiveError(f"{path}: not a model archive")
    if int(version) != FORMAT_VERSION:
        raise ArchiveVersionError(f"{path}: archive format version {version}, this build reads {FORMAT_VERSION}")
    header = json.loads(rest[:size].decode("utf-8"))
    return header, rest[size:]


def load_model(path: str | Path) -> tuple[SRLModel, TrainConfig | None, dict]:
    """Returns (model, training config or None, metadata)."""
    header, data = read_header(path)
    cfg = config_from_dict(ModelConfig, header["model_config"])
    train_cfg = None
    if header.get("train_config") is not None:
        train_cfg = config_from_dict(TrainConfig, header["train_config"])
    model = SRLModel(cfg, Vocabulary.from_dict(header["vocab"]), seed=header["seed"])
    state = {}
    for entry in header["manifest"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        if start + 4 * count > len(data):
            raise ArchiveError(f"{path}: array {entry['name']} runs past end of file")
        state[entry["name"]] = np.frombuffer(data, dtype="<f4", count=count, offset=start).reshape(shape)
    model.load_state(state)
    return model, train_cfg, header.get("metadata", {})
