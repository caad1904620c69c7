"""Binary storage for embedding matrices and query vectors.

Container layout (little-endian throughout):

    bytes 0..3    magic "QEMB"
    bytes 4..7    u32 format version, currently 1
    bytes 8..11   u32 dim   (rows, embedding dimension)
    bytes 12..15  u32 count (columns, one per candidate)
    bytes 16..    dim * count float32 values, column-major: column i occupies
                  bytes 16 + i*dim*4 .. 16 + (i+1)*dim*4

Identifiers live in a UTF-8 sidecar file, one id per line, LF terminated,
exactly ``count`` lines, aligned with the columns. Values are stored at
float32 precision and read back verbatim; downstream numerics promote to
float64. Loaded matrices are immutable.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FileFormatError

MAGIC = b"QEMB"
VERSION = 1
HEADER_SIZE = 16


class MalformedHeaderError(FileFormatError):
    """Magic, version, or a header field is invalid."""


class PayloadSizeError(FileFormatError):
    """Payload length disagrees with the dim/count declared in the header."""


class IdCountError(FileFormatError):
    """Id sidecar line count disagrees with the header count."""


class DuplicateIdError(FileFormatError):
    """The id sidecar repeats an identifier."""


class NonFiniteValueError(FileFormatError):
    """The payload contains NaN or infinity."""


@dataclass(frozen=True)
class EmbeddingMatrix:
    """A dim x count embedding dictionary; column i belongs to ids[i]."""

    dim: int
    count: int
    values: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        values = np.asfortranarray(self.values)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got ndim={values.ndim}")
        if self.dim <= 0 or self.count <= 0:
            raise ValueError(f"dim and count must be positive, got {self.dim}x{self.count}")
        if values.shape != (self.dim, self.count):
            raise ValueError(
                f"values shape {values.shape} does not match dim x count = {self.dim}x{self.count}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        ids = tuple(self.ids)
        if len(ids) != self.count:
            raise ValueError(f"got {len(ids)} ids for {self.count} columns")
        if len(set(ids)) != len(ids):
            raise ValueError("ids must be distinct")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_columns(cls, values, ids) -> "EmbeddingMatrix":
        values = np.asfortranarray(values)
        return cls(dim=values.shape[0], count=values.shape[1], values=values, ids=tuple(ids))


@dataclass(frozen=True)
class QueryEmbedding:
    """A single query vector with its identifier."""

    id: str
    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.ndim != 1:
            raise ValueError(f"query vector must be 1-D, got ndim={vector.ndim}")
        if not np.all(np.isfinite(vector)):
            raise ValueError("query vector contains non-finite entries")
        object.__setattr__(self, "vector", vector)


def column(matrix: EmbeddingMatrix, index: int) -> np.ndarray:
    """Return the index-th candidate embedding as float64, length dim."""
    if not 0 <= index < matrix.count:
        raise IndexError(f"column {index} out of range for count={matrix.count}")
    return np.asarray(matrix.values[:, index], dtype=np.float64)


def matrix_to_bytes(values: np.ndarray) -> bytes:
    """Serialize a 2-D array as one QEMB block (header + float32 payload)."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("expected a 2-D array")
    rows, cols = values.shape
    header = MAGIC + struct.pack("<III", VERSION, rows, cols)
    return header + np.asarray(values, dtype="<f4").tobytes(order="F")


def matrix_from_bytes(data: bytes, offset: int = 0, end: int | None = None) -> np.ndarray:
    """Parse one QEMB block starting at ``offset``; error offsets are absolute.

    ``end`` bounds the block; when omitted the block must fill the rest of
    the buffer exactly.
    """
    if end is None:
        end = len(data)
    if end - offset < HEADER_SIZE:
        raise MalformedHeaderError(
            f"truncated header: {end - offset} bytes at byte {offset}, need {HEADER_SIZE}"
        )
    magic = data[offset:offset + 4]
    if magic != MAGIC:
        raise MalformedHeaderError(f"bad magic {magic!r} at byte {offset}, expected {MAGIC!r}")
    version, dim, count = struct.unpack_from("<III", data, offset + 4)
    if version != VERSION:
        raise MalformedHeaderError(
            f"unsupported version {version} at byte {offset + 4}, expected {VERSION}"
        )
    if dim == 0:
        raise MalformedHeaderError(f"dim is zero at byte {offset + 8}")
    if count == 0:
        raise MalformedHeaderError(f"count is zero at byte {offset + 12}")
    payload_start = offset + HEADER_SIZE
    expected_end = payload_start + 4 * dim * count
    if expected_end != end:
        raise PayloadSizeError(
            f"block starting at byte {offset} declares dim={dim} count={count} "
            f"(payload ends at byte {expected_end}) but data ends at byte {end}"
        )
    flat = np.frombuffer(data, dtype="<f4", count=dim * count, offset=payload_start)
    finite = np.isfinite(flat)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValueError(
            f"non-finite value at flat index {bad} (byte {payload_start + 4 * bad})"
        )
    return flat.reshape((dim, count), order="F")


def _read_id_lines(ids_path) -> list[str]:
    text = Path(ids_path).read_text(encoding="utf-8")
    if text == "":
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        if line in seen:
            raise DuplicateIdError(
                f"{ids_path}: duplicate id {line!r} at line {lineno} (first seen at line {seen[line]})"
            )
        seen[line] = lineno
    return lines


def load_matrix(path, ids_path) -> EmbeddingMatrix:
    """Load a QEMB matrix plus its id sidecar, validating both."""
    data = Path(path).read_bytes()
    try:
        values = matrix_from_bytes(data)
    except FileFormatError as exc:
        raise type(exc)(f"{path}: {exc}") from None
    ids = _read_id_lines(ids_path)
    if len(ids) != values.shape[1]:
        raise IdCountError(
            f"{ids_path}: sidecar has {len(ids)} lines, header count is {values.shape[1]}"
        )
    return EmbeddingMatrix(dim=values.shape[0], count=values.shape[1], values=values, ids=tuple(ids))


def write_matrix(matrix: EmbeddingMatrix, path, ids_path) -> None:
    """Write matrix + sidecar. write(load(f)) reproduces f byte for byte."""
    for position, identifier in enumerate(matrix.ids):
        if "\n" in identifier or "\r" in identifier:
            raise ValueError(f"id at position {position} contains a line break")
    Path(path).write_bytes(matrix_to_bytes(matrix.values))
    Path(ids_path).write_text("".join(s + "\n" for s in matrix.ids), encoding="utf-8")


def load_queries(path, ids_path) -> list[QueryEmbedding]:
    """Load a QEMB file as a list of query vectors (one per column)."""
    matrix = load_matrix(path, ids_path)
    return [QueryEmbedding(id=matrix.ids[i], vector=column(matrix, i)) for i in range(matrix.count)]


def write_queries(queries: list[QueryEmbedding], path, ids_path) -> None:
    if not queries:
        raise ValueError("no queries to write")
    dim = queries[0].vector.shape[0]
    stacked = np.stack([q.vector for q in queries], axis=1)
    matrix = EmbeddingMatrix(dim=dim, count=len(queries), values=stacked, ids=tuple(q.id for q in queries))
    write_matrix(matrix, path, ids_path)
