"""Binary per-layer embedding stores, layer pooling and vector averaging.

Store layout (all little-endian):

    magic "LMSE" | version u16 | layer_count u32 | dim u32 | record_count u64
    | model_tag: u16 length + UTF-8 bytes
    | records: [u16 key length][key bytes][layer_count * dim float32]

Row 0 of each record matrix is the initialization (embedding) layer, the
last row is the final layer. Payloads are stored as float32; all pooling
and averaging arithmetic accumulates in float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import (
    BadMagic,
    EmptyInput,
    LayerCountMismatch,
    ShapeMismatch,
    TruncatedFile,
)

MAGIC = b"LMSE"
VERSION = 1
_HEADER = struct.Struct("<4sHIIQ")
_U16 = struct.Struct("<H")

GLOSS_PREFIX = "gloss::"


@dataclass(frozen=True)
class StoreHeader:
    layer_count: int
    dim: int
    record_count: int = 0
    model_tag: str = ""
    version: int = VERSION

    def __post_init__(self):
        if self.layer_count < 2:
            raise ShapeMismatch(f"layer_count {self.layer_count} < 2")
        if self.dim < 1:
            raise ShapeMismatch(f"dim {self.dim} < 1")


@dataclass(frozen=True)
class LayerEmbeddingRecord:
    key: str
    matrix: np.ndarray  # (layer_count, dim) float32


def write_store(header: StoreHeader, records: Iterable[LayerEmbeddingRecord], path) -> StoreHeader:
    """Write records sequentially; returns the header with the final count."""
    count = 0
    with open(path, "wb") as out:
        out.write(_HEADER.pack(MAGIC, header.version, header.layer_count, header.dim, 0))
        tag = header.model_tag.encode("utf-8")
        out.write(_U16.pack(len(tag)))
        out.write(tag)
        for record in records:
            matrix = np.asarray(record.matrix, dtype=np.float32)
            if matrix.shape != (header.layer_count, header.dim):
                raise ShapeMismatch(
                    f"record {record.key!r} has shape {matrix.shape}, "
                    f"expected {(header.layer_count, header.dim)}"
                )
            if not np.all(np.isfinite(matrix)):
                raise ShapeMismatch(f"record {record.key!r} contains non-finite values")
            key = record.key.encode("utf-8")
            out.write(_U16.pack(len(key)))
            out.write(key)
            out.write(matrix.tobytes(order="C"))
            count += 1
        out.seek(0)
        out.write(_HEADER.pack(MAGIC, header.version, header.layer_count, header.dim, count))
    return StoreHeader(header.layer_count, header.dim, count, header.model_tag, header.version)


def _read_exact(stream, n: int) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise TruncatedFile(f"expected {n} bytes, got {len(data)}")
    return data


def read_header(stream) -> StoreHeader:
    raw = stream.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise TruncatedFile("file shorter than header")
    magic, version, layer_count, dim, record_count = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"unsupported version {version}")
    (tag_len,) = _U16.unpack(_read_exact(stream, _U16.size))
    model_tag = _read_exact(stream, tag_len).decode("utf-8")
    return StoreHeader(layer_count, dim, record_count, model_tag, version)


def read_store(path) -> tuple[StoreHeader, Iterator[LayerEmbeddingRecord]]:
    """Open a store; records are yielded lazily in write order."""
    stream = open(path, "rb")
    try:
        header = read_header(stream)
    except Exception:
        stream.close()
        raise

    def records() -> Iterator[LayerEmbeddingRecord]:
        matrix_bytes = header.layer_count * header.dim * 4
        with stream:
            for _ in range(header.record_count):
                raw_len = stream.read(_U16.size)
                if len(raw_len) != _U16.size:
                    raise TruncatedFile("record count exceeds file contents")
                (key_len,) = _U16.unpack(raw_len)
                key = _read_exact(stream, key_len).decode("utf-8")
                buf = _read_exact(stream, matrix_bytes)
                matrix = np.frombuffer(buf, dtype="<f4").reshape(
                    header.layer_count, header.dim
                )
                yield LayerEmbeddingRecord(key, matrix)

    return header, records()


def load_store_dict(path) -> tuple[StoreHeader, dict[str, np.ndarray]]:
    """Read a whole store into memory as key -> (layer_count, dim) float32."""
    header, records = read_store(path)
    return header, {record.key: record.matrix for record in records}


def pool_layers(matrix: np.ndarray | LayerEmbeddingRecord, weights) -> np.ndarray:
    """Weighted sum of layer rows, accumulated and returned in float64."""
    if isinstance(matrix, LayerEmbeddingRecord):
        matrix = matrix.matrix
    weights = np.asarray(getattr(weights, "weights", weights), dtype=np.float64)
    if weights.shape != (matrix.shape[0],):
        raise LayerCountMismatch(
            f"profile has {weights.shape[0] if weights.ndim else 0} weights, "
            f"record has {matrix.shape[0]} layers"
        )
    return weights @ matrix.astype(np.float64, copy=False)


def average_vectors(vectors) -> np.ndarray:
    """Elementwise float64 mean of equal-dimension vectors."""
    vectors = list(vectors)
    if not vectors:
        raise EmptyInput("no vectors to average")
    stacked = np.asarray([np.asarray(v, dtype=np.float64) for v in vectors])
    return stacked.mean(axis=0)


class CombinedRecords(Mapping):
    """Read-only view over several record mappings (later ones win lookups)."""

    def __init__(self, *mappings: Mapping[str, np.ndarray]):
        self._mappings = mappings

    def __getitem__(self, key):
        for mapping in reversed(self._mappings):
            if key in mapping:
                return mapping[key]
        raise KeyError(key)

    def __contains__(self, key):
        return any(key in m for m in self._mappings)

    def __iter__(self):
        seen = set()
        for mapping in self._mappings:
            for key in mapping:
                if key not in seen:
                    seen.add(key)
                    yield key

    def __len__(self):
        return sum(1 for _ in iter(self))
