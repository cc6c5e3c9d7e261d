"""Binary file formats and report serialisation.

Three little-endian formats, each opening with a 4-byte magic and a u32
version:

  dataset   "CSSD"  v1  n:u64  dim:u64  has_labels:u8  inputs:f32[n*dim]  labels:i64[n]?
  index     "CSSK"  v1  n:u64  pool:u64  neighbors:u32[n*pool]
  model     "CSSM"  v1  layer_count:u32  then per layer:
                        out:u32  in:u32  activation:u8  weights:f32[out*in]  bias:f32[out]

Unknown versions are rejected outright.  Values are float32 on disk and
float64 in memory.  All writers go through a write-temp-then-rename step
so a crash never leaves a half-written file behind.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .data import Dataset
from .errors import FormatError, NumericalError
from .knn import NeighborIndex
from .models import ACTIVATIONS, Layer, MlpModel

MAGIC_DATASET = b"CSSD"
MAGIC_INDEX = b"CSSK"
MAGIC_MODEL = b"CSSM"
FORMAT_VERSION = 1

_ACT_CODE = {"identity": 0, "relu": 1, "tanh": 2}
_ACT_NAME = {v: k for k, v in _ACT_CODE.items()}
assert set(_ACT_CODE) == set(ACTIVATIONS)


class _Reader:
    """Cursor over a byte blob that raises 'truncated' on short reads."""

    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def take(self, nbytes: int) -> bytes:
        if self.pos + nbytes > len(self.blob):
            raise FormatError("truncated")
        out = self.blob[self.pos : self.pos + nbytes]
        self.pos += nbytes
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        nbytes = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(nbytes), dtype=dtype).copy()

    def done(self) -> None:
        if self.pos != len(self.blob):
            raise FormatError("trailing bytes")


def _check_header(r: _Reader, magic: bytes) -> None:
    if r.take(4) != magic:
        raise FormatError("bad magic")
    (version,) = r.unpack("<I")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}")


def atomic_write(path, blob: bytes) -> None:
    """Write to a temp file in the same directory, then rename into place."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def _read_file(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# dataset

def encode_dataset(dataset: Dataset) -> bytes:
    has_labels = dataset.labels is not None
    parts = [
        MAGIC_DATASET,
        struct.pack("<IQQB", FORMAT_VERSION, dataset.n, dataset.dim, int(has_labels)),
        dataset.inputs.astype("<f4").tobytes(),
    ]
    if has_labels:
        parts.append(dataset.labels.astype("<i8").tobytes())
    return b"".join(parts)


def decode_dataset(blob: bytes) -> Dataset:
    r = _Reader(blob)
    _check_header(r, MAGIC_DATASET)
    n, dim, has_labels = r.unpack("<QQB")
    if n < 1 or dim < 1:
        raise FormatError("empty dataset")
    if has_labels not in (0, 1):
        raise FormatError("bad has_labels flag")
    inputs = r.array("<f4", n * dim).astype(np.float64).reshape(n, dim)
    if not np.all(np.isfinite(inputs)):
        raise NumericalError("non-finite values in dataset")
    labels = None
    if has_labels:
        labels = r.array("<i8", n)
        if labels.min() < 0:
            raise FormatError("negative label")
    r.done()
    return Dataset(inputs, labels)


def write_dataset(path, dataset: Dataset) -> None:
    atomic_write(path, encode_dataset(dataset))


def read_dataset(path) -> Dataset:
    return decode_dataset(_read_file(path))


# ---------------------------------------------------------------------------
# neighbour index

def encode_index(index: NeighborIndex) -> bytes:
    return b"".join(
        [
            MAGIC_INDEX,
            struct.pack("<IQQ", FORMAT_VERSION, index.n, index.pool),
            index.neighbors.astype("<u4").tobytes(),
        ]
    )


def decode_index(blob: bytes) -> NeighborIndex:
    r = _Reader(blob)
    _check_header(r, MAGIC_INDEX)
    n, pool = r.unpack("<QQ")
    if n < 2 or pool < 1:
        raise FormatError("bad index dimensions")
    neighbors = r.array("<u4", n * pool).astype(np.int64).reshape(n, pool)
    r.done()
    try:
        return NeighborIndex(n=int(n), pool=int(pool), neighbors=neighbors)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_index(path, index: NeighborIndex) -> None:
    atomic_write(path, encode_index(index))


def read_index(path) -> NeighborIndex:
    return decode_index(_read_file(path))


# ---------------------------------------------------------------------------
# model checkpoint

def encode_model(model: MlpModel) -> bytes:
    parts = [MAGIC_MODEL, struct.pack("<II", FORMAT_VERSION, len(model.layers))]
    for layer in model.layers:
        out_dim, in_dim = layer.weight.shape
        parts.append(struct.pack("<IIB", out_dim, in_dim, _ACT_CODE[layer.activation]))
        parts.append(layer.weight.astype("<f4").tobytes())
        parts.append(layer.bias.astype("<f4").tobytes())
    return b"".join(parts)


def decode_model(blob: bytes) -> MlpModel:
    r = _Reader(blob)
    _check_header(r, MAGIC_MODEL)
    (layer_count,) = r.unpack("<I")
    if layer_count < 1:
        raise FormatError("model has no layers")
    layers = []
    for _ in range(layer_count):
        out_dim, in_dim, act_code = r.unpack("<IIB")
        if out_dim < 1 or in_dim < 1:
            raise FormatError("bad layer dimensions")
        if act_code not in _ACT_NAME:
            raise FormatError(f"unknown activation code {act_code}")
        W = r.array("<f4", out_dim * in_dim).astype(np.float64).reshape(out_dim, in_dim)
        b = r.array("<f4", out_dim).astype(np.float64)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise NumericalError("non-finite values in checkpoint")
        layers.append(Layer(W, b, _ACT_NAME[act_code]))
    r.done()
    try:
        return MlpModel(layers)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def write_model(path, model: MlpModel) -> None:
    atomic_write(path, encode_model(model))


def read_model(path) -> MlpModel:
    return decode_model(_read_file(path))


# ---------------------------------------------------------------------------
# metrics reports: line-delimited key<TAB>value records

def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)  # repr round-trips float64 exactly
    return str(value)


def render_report(records) -> str:
    """``records`` is an ordered mapping or (key, value) iterable."""
    items = records.items() if hasattr(records, "items") else records
    lines = []
    for key, value in items:
        key = str(key)
        if "\t" in key or "\n" in key:
            raise ValueError("report keys must not contain tabs or newlines")
        lines.append(f"{key}\t{format_value(value)}\n")
    return "".join(lines)


def parse_report(text: str) -> dict:
    out = {}
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        key, sep, raw = line.partition("\t")
        if not sep:
            raise FormatError(f"report line {line_no} has no tab separator")
        out[key] = _parse_scalar(raw)
    return out


def _parse_scalar(raw: str):
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def write_report(path, records) -> None:
    atomic_write(path, render_report(records).encode("utf-8"))


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_report(fh.read())
