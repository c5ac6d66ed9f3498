# Copyright 2025 The Two-Way Coding Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Versioned binary checkpoints.

Layout: 4-byte magic, little-endian uint32 version, uint32 header length,
a UTF-8 JSON header, then the row-major little-endian payload of every
entry in header order. Each entry keeps its parameter set's float width
("<f4" or "<f8", recorded in the header). Entries cover parameters, both
optimizer moments and buffers of each ParameterSet.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from ..errors import CheckpointError
from .params import ParameterSet

logger = logging.getLogger(__name__)

MAGIC = b"TWCK"
VERSION = 2
_KINDS = ("param", "moment1", "moment2", "buffer")


@dataclass
class Checkpoint:
    """Parameter sets plus the fingerprint of the config that produced them."""

    param_sets: Dict[str, ParameterSet]
    fingerprint: str
    metadata: Dict[str, Any] = field(default_factory=dict)


def _entries(set_name: str, params: ParameterSet):
    for name, tensor in params:
        yield set_name, "param", name, tensor.data
        yield set_name, "moment1", name, params.moment1[name]
        yield set_name, "moment2", name, params.moment2[name]
    for name, value in params.buffers.items():
        yield set_name, "buffer", name, value


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header = {
        "fingerprint": checkpoint.fingerprint,
        "metadata": checkpoint.metadata,
        "sets": {
            name: {"step_count": params.step_count, "dtype": params.dtype.name}
            for name, params in checkpoint.param_sets.items()
        },
        "entries": [],
    }
    payload = []
    for set_name, params in checkpoint.param_sets.items():
        for set_key, kind, name, value in _entries(set_name, params):
            array = np.ascontiguousarray(value, dtype=params.dtype.newbyteorder("<"))
            header["entries"].append(
                {
                    "set": set_key,
                    "kind": kind,
                    "name": name,
                    "shape": list(array.shape),
                    "dtype": array.dtype.str,
                }
            )
            payload.append(array.tobytes(order="C"))

    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<II", VERSION, len(header_bytes)))
        handle.write(header_bytes)
        for chunk in payload:
            handle.write(chunk)
    logger.info(f"Wrote checkpoint {path}")
    return path


def load_checkpoint(
    path: Union[str, Path], expected_fingerprint: Optional[str] = None
) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    version, header_len = struct.unpack("<II", raw[4:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except ValueError as e:
        raise CheckpointError(f"{path}: corrupt header ({e})")

    if expected_fingerprint is not None and header["fingerprint"] != expected_fingerprint:
        raise CheckpointError(
            f"{path}: config fingerprint {header['fingerprint'][:12]} does not match "
            f"{expected_fingerprint[:12]}"
        )

    sets: Dict[str, ParameterSet] = {}
    for name, info in header["sets"].items():
        params = ParameterSet(dtype=np.dtype(info["dtype"]))
        params.step_count = int(info["step_count"])
        sets[name] = params

    offset = 12 + header_len
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + dtype.itemsize * count
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated payload at {entry['name']}")
        value = np.frombuffer(raw[offset:end], dtype=dtype).reshape(shape)
        offset = end
        params = sets[entry["set"]]
        kind = entry["kind"]
        if kind == "param":
            params.add(entry["name"], value)
        elif kind == "buffer":
            params.add_buffer(entry["name"], value)
        elif kind in _KINDS:
            getattr(params, kind)[entry["name"]] = value.astype(params.dtype)
        else:
            raise CheckpointError(f"{path}: unknown entry kind {kind!r}")

    return Checkpoint(param_sets=sets, fingerprint=header["fingerprint"], metadata=header["metadata"])
