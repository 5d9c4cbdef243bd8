"""Binary checkpoint format.

Layout::

    b"G2CK" | uint32 LE format version | uint64 LE header length | JSON header | payload

The header lists every tensor as ``{"name", "shape", "offset", "nbytes"}``;
the payload is the concatenation of little-endian float32 arrays in index
order, and the offsets must tile it exactly.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .bio import tag_inventory
from .config import RunConfig
from .encoder import UNK_ID, UNK_POS_ID, EncoderConfig
from .graph import LabelVocabulary
from .model import POS_SPECIALS, TOKEN_SPECIALS, G2CModel, Vocabulary
from .tensor import Tensor

MAGIC = b"G2CK"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sIQ")


class CheckpointFormatError(ValueError):
    pass


@dataclass
class Checkpoint:
    model: G2CModel
    run_config: RunConfig
    optimizer: dict | None = None
    rng_state: dict | None = None
    meta: dict = field(default_factory=dict)


def save_checkpoint(path, model, run_config, optimizer=None, rng_state=None, meta=None):
    """Write ``model`` (and optionally Adam moments / RNG state) to ``path``.

    ``optimizer`` is ``{"step": int, "m": {name: array}, "v": {name: array}}``.
    """
    arrays = [(f"param/{k}", model.params[k].data) for k in sorted(model.params)]
    opt_header = None
    if optimizer is not None:
        opt_header = {"step": int(optimizer["step"])}
        for slot in ("m", "v"):
            arrays += [(f"adam_{slot}/{k}", optimizer[slot][k]) for k in sorted(optimizer[slot])]
    index, chunks, offset = [], [], 0
    for name, arr in arrays:
        buf = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        index.append({"name": name, "shape": list(np.shape(arr)), "offset": offset, "nbytes": len(buf)})
        chunks.append(buf)
        offset += len(buf)
    header = {
        "run_config": run_config.to_dict(),
        "encoder_config": model.config.to_dict(),
        "vocab": {
            "tokens": model.tokens.items(),
            "pos_tags": model.pos_tags.items(),
            "dep_labels": list(model.dep_labels.labels),
            "lf_labels": model.lf_labels,
        },
        "tags": list(model.scheme.tags),
        "tensors": index,
        "optimizer": opt_header,
        "rng": rng_state,
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for buf in chunks:
            f.write(buf)


def _read_header(raw):
    if len(raw) < _PREFIX.size:
        raise CheckpointFormatError("file too short for a checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError("bad magic bytes")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    start = _PREFIX.size
    if start + header_len > len(raw):
        raise CheckpointFormatError("truncated header")
    try:
        header = json.loads(raw[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"corrupt header: {exc}") from None
    return header, raw[start + header_len:]


def _read_tensors(index, payload):
    expected = 0
    tensors = {}
    for entry in sorted(index, key=lambda e: e["offset"]):
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 4
        if entry["offset"] != expected or entry["nbytes"] != nbytes:
            raise CheckpointFormatError(f"offsets do not tile the payload at {entry['name']!r}")
        expected += nbytes
        if expected > len(payload):
            raise CheckpointFormatError(f"truncated payload at {entry['name']!r}")
        tensors[entry["name"]] = np.frombuffer(payload, dtype="<f4", count=nbytes // 4,
                                               offset=entry["offset"]).reshape(shape)
    if expected != len(payload):
        raise CheckpointFormatError(f"payload is {len(payload)} bytes, index covers {expected}")
    return tensors


def load_checkpoint(path):
    with open(path, "rb") as f:
        raw = f.read()
    header, payload = _read_header(raw)
    try:
        tensors = _read_tensors(header["tensors"], payload)
        vocab = header["vocab"]
        config = EncoderConfig(**header["encoder_config"])
        run_config = RunConfig.from_dict(header["run_config"])
        scheme = tag_inventory(vocab["lf_labels"])
    except (KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"incomplete header: {exc}") from None
    if list(scheme.tags) != header["tags"]:
        raise CheckpointFormatError("tag inventory does not match LF labels")
    params = {
        name[len("param/"):]: Tensor(arr.astype(np.float64), requires_grad=True)
        for name, arr in tensors.items() if name.startswith("param/")
    }
    model = G2CModel(
        config,
        Vocabulary(vocab["tokens"], TOKEN_SPECIALS, UNK_ID),
        Vocabulary(vocab["pos_tags"], POS_SPECIALS, UNK_POS_ID),
        LabelVocabulary(tuple(vocab["dep_labels"])),
        scheme,
        params,
    )
    optimizer = None
    if header.get("optimizer") is not None:
        optimizer = {"step": header["optimizer"]["step"], "m": {}, "v": {}}
        for name, arr in tensors.items():
            slot, _, key = name.partition("/")
            if slot in ("adam_m", "adam_v"):
                optimizer[slot[-1]][key] = arr.astype(np.float64)
    return Checkpoint(model, run_config, optimizer, header.get("rng"), header.get("meta", {}))
