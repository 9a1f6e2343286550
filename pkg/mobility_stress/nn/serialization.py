"""Versioned binary model files.

Layout: magic ``MSNN``, format version (uint16 LE), header length (uint32
LE), a UTF-8 JSON header describing the architecture and array order, then
every array as float64 little-endian in header order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from mobility_stress.exceptions import MobilityStressError
from mobility_stress.nn.network import LayerSpec, Network

MAGIC = b"MSNN"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class ModelFormatError(MobilityStressError):
    """A model file is truncated, foreign or of an unsupported version."""


def network_to_bytes(net: Network) -> bytes:
    state = net.state_dict()
    names = sorted(state, key=_array_order)
    header: Dict[str, Any] = {
        "in_dim": net.in_dim,
        "bn_momentum": net.bn_momentum,
        "bn_eps": net.bn_eps,
        "layers": [spec.model_dump(mode="json") for spec in net.specs],
        "arrays": [[name, list(state[name].shape)] for name in names],
    }
    header_json = json.dumps(header, sort_keys=True, separators=(",", ":"))
    header_bytes = header_json.encode("utf-8")
    body = b"".join(state[name].astype("<f8").tobytes() for name in names)
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)) + header_bytes + body


def network_from_bytes(blob: bytes) -> Network:
    if len(blob) < _PREFIX.size:
        raise ModelFormatError("model file is truncated")
    magic, version, header_len = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    start = _PREFIX.size
    if start + header_len > len(blob):
        raise ModelFormatError("model file is truncated inside the header")
    try:
        header = json.loads(blob[start : start + header_len].decode("utf-8"))
    except ValueError as e:
        raise ModelFormatError(f"model header is not valid JSON: {e}") from e
    offset = start + header_len

    net = Network(
        header["in_dim"],
        [LayerSpec.model_validate(spec) for spec in header["layers"]],
        bn_momentum=header["bn_momentum"],
        bn_eps=header["bn_eps"],
    )
    state: Dict[str, np.ndarray] = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        size = count * 8
        if offset + size > len(blob):
            raise ModelFormatError(f"model file is truncated inside array {name}")
        raw = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        state[name] = raw.reshape(shape).astype(np.float64)
        offset += size
    if offset != len(blob):
        trailing = len(blob) - offset
        raise ModelFormatError(f"{trailing} trailing bytes after the last array")
    net.load_state_dict(state)
    return net


def save_network(net: Network, path: Union[str, Path]) -> None:
    Path(path).write_bytes(network_to_bytes(net))


def load_network(path: Union[str, Path]) -> Network:
    return network_from_bytes(Path(path).read_bytes())


def _array_order(name: str) -> List[Any]:
    layer, field = name.split(".", 1)
    return [int(layer), field]
