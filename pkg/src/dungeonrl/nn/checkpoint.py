"""Versioned, checksummed binary model files.

Layout (little-endian, documented in docs/model_format.md):

    bytes 0-7    magic "NPCNETv1"
    bytes 8-11   format version u32
    bytes 12-15  header length u32
    then         header JSON (spec, head kind, meta, tensor manifest)
    then         raw tensor payloads in manifest order (C-order)
    last 4       CRC32 over everything before it

Round-trips are bit-exact; any flipped byte fails the checksum.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .autograd import Tensor
from .network import NetworkSpec, PolicyParams

MAGIC = b"NPCNETv1"
FORMAT_VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64}


class ModelFormatError(Exception):
    """Unreadable or corrupt model file."""


def save_model(params: PolicyParams, spec: NetworkSpec, path, meta: dict = None):
    """Write one network's named tensors plus its spec to path."""
    manifest = []
    payload = bytearray()
    for name in sorted(params.names()):
        data = params[name].data
        if data.dtype.name not in _DTYPES:
            raise ModelFormatError(f"unsupported dtype {data.dtype} for {name}")
        manifest.append({"name": name, "shape": list(data.shape),
                         "dtype": data.dtype.name})
        payload += np.ascontiguousarray(data).tobytes()
    header = json.dumps({
        "spec": spec.to_dict(),
        "head": params.head,
        "meta": meta or {},
        "tensors": manifest,
    }, sort_keys=True).encode("utf-8")
    body = MAGIC + struct.pack("<II", FORMAT_VERSION, len(header)) + header + payload
    crc = zlib.crc32(body) & 0xFFFFFFFF
    with open(path, "wb") as fh:
        fh.write(body + struct.pack("<I", crc))


def load_model(path):
    """Read a model file back as (PolicyParams, NetworkSpec, meta)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 12:
        raise ModelFormatError("truncated file: missing header")
    if blob[:8] != MAGIC:
        raise ModelFormatError("bad magic: not a model file")
    body, (crc,) = blob[:-4], struct.unpack("<I", blob[-4:])
    if zlib.crc32(body) & 0xFFFFFFFF != crc:
        raise ModelFormatError("checksum failure: file is corrupt")
    version, header_len = struct.unpack("<II", blob[8:16])
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"version mismatch: file v{version}, supported v{FORMAT_VERSION}")
    try:
        header = json.loads(blob[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"unreadable header: {exc}") from exc
    spec = NetworkSpec.from_dict(header["spec"])
    tensors = {}
    offset = 16 + header_len
    for entry in header["tensors"]:
        dtype = _DTYPES[entry["dtype"]]
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape)) * np.dtype(dtype).itemsize
        chunk = body[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise ModelFormatError(f"truncated file: tensor {entry['name']} incomplete")
        data = np.frombuffer(chunk, dtype=dtype).reshape(shape).copy()
        tensors[entry["name"]] = Tensor(data, requires_grad=True, name=entry["name"])
        offset += nbytes
    params = PolicyParams(spec, header["head"], tensors)
    return params, spec, header.get("meta", {})
