"""Gated recurrent unit forward pass for sentence encoding.

One update step, all arithmetic in float64, no bias terms:

    r = sigmoid(U_r h_prev + W_r x)
    z = sigmoid(U_z h_prev + W_z x)
    h_cand = tanh(U (r * h_prev) + W x)
    h = z * h_cand + (1 - z) * h_prev

A sentence is encoded by folding its word vectors through the step from a
zero initial state; the empty sequence encodes to the zero vector.

Weights travel in a single archive file: a short ASCII manifest naming the
six matrix roles and shapes, then one QEMB block per matrix in manifest
order. Word vectors come from a QEMB matrix whose id sidecar holds one
token per line; out-of-vocabulary tokens map to the zero vector.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingMatrix, load_matrix, matrix_from_bytes, matrix_to_bytes
from .errors import FileFormatError
from .metrics import tokenize

GRU_ROLES = ("U_r", "U_z", "U", "W_r", "W_z", "W")

_ARCHIVE_TAG = "GRUW"
_ARCHIVE_VERSION = 1


@dataclass(frozen=True)
class GruWeights:
    u_r: np.ndarray
    u_z: np.ndarray
    u: np.ndarray
    w_r: np.ndarray
    w_z: np.ndarray
    w: np.ndarray
    hidden: int
    input: int

    def __post_init__(self):
        if self.hidden <= 0 or self.input <= 0:
            raise ValueError(f"hidden and input must be positive, got {self.hidden}, {self.input}")
        shapes = {
            "u_r": (self.hidden, self.hidden),
            "u_z": (self.hidden, self.hidden),
            "u": (self.hidden, self.hidden),
            "w_r": (self.hidden, self.input),
            "w_z": (self.hidden, self.input),
            "w": (self.hidden, self.input),
        }
        for name, expected in shapes.items():
            value = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if value.shape != expected:
                raise ValueError(f"{name} must have shape {expected}, got {value.shape}")
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, value)

    @classmethod
    def from_matrices(cls, u_r, u_z, u, w_r, w_z, w) -> "GruWeights":
        u_r = np.asarray(u_r)
        w_r = np.asarray(w_r)
        return cls(u_r=u_r, u_z=u_z, u=u, w_r=w_r, w_z=w_z, w=w,
                   hidden=u_r.shape[0], input=w_r.shape[1])


def _sigmoid(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    positive = v >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-v[positive]))
    exp_v = np.exp(v[~positive])
    out[~positive] = exp_v / (1.0 + exp_v)
    return out


def gru_step(weights: GruWeights, h_prev, x) -> np.ndarray:
    h_prev = np.asarray(h_prev, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if h_prev.shape != (weights.hidden,):
        raise ValueError(f"state must have shape ({weights.hidden},), got {h_prev.shape}")
    if x.shape != (weights.input,):
        raise ValueError(f"input must have shape ({weights.input},), got {x.shape}")
    reset = _sigmoid(weights.u_r @ h_prev + weights.w_r @ x)
    update = _sigmoid(weights.u_z @ h_prev + weights.w_z @ x)
    candidate = np.tanh(weights.u @ (reset * h_prev) + weights.w @ x)
    return update * candidate + (1.0 - update) * h_prev


def encode(weights: GruWeights, vectors) -> np.ndarray:
    """Fold a sequence of word vectors into a final hidden state."""
    state = np.zeros(weights.hidden, dtype=np.float64)
    for x in vectors:
        state = gru_step(weights, state, x)
    return state


class WordTable:
    """Token -> embedding lookup; unknown tokens get the zero vector."""

    def __init__(self, matrix: EmbeddingMatrix):
        self.matrix = matrix
        self._index = {token: i for i, token in enumerate(matrix.ids)}

    @classmethod
    def load(cls, path, ids_path) -> "WordTable":
        return cls(load_matrix(path, ids_path))

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def vector(self, token: str) -> np.ndarray:
        i = self._index.get(token)
        if i is None:
            return np.zeros(self.matrix.dim, dtype=np.float64)
        return np.asarray(self.matrix.values[:, i], dtype=np.float64)


def encode_text(weights: GruWeights, table: WordTable, text: str) -> np.ndarray:
    """Tokenize with the canonical tokenizer, look up word vectors, encode."""
    if table.dim != weights.input:
        raise ValueError(f"word table dim {table.dim} does not match GRU input {weights.input}")
    return encode(weights, (table.vector(token) for token in tokenize(text)))


def write_gru_weights(weights: GruWeights, path) -> None:
    matrices = (weights.u_r, weights.u_z, weights.u, weights.w_r, weights.w_z, weights.w)
    lines = [f"{_ARCHIVE_TAG} {_ARCHIVE_VERSION}"]
    for role, matrix in zip(GRU_ROLES, matrices):
        lines.append(f"matrix {role} {matrix.shape[0]} {matrix.shape[1]}")
    lines.append("END")
    header = ("\n".join(lines) + "\n").encode("ascii")
    blobs = b"".join(matrix_to_bytes(m) for m in matrices)
    Path(path).write_bytes(header + blobs)


def load_gru_weights(path) -> GruWeights:
    data = Path(path).read_bytes()

    # Manifest: ASCII lines up to and including "END"; blobs follow.
    shapes: dict[str, tuple[int, int]] = {}
    order: list[str] = []
    offset = 0
    lineno = 0
    saw_end = False
    while offset < len(data):
        newline = data.find(b"\n", offset)
        if newline < 0:
            break
        lineno += 1
        try:
            line = data[offset:newline].decode("ascii")
        except UnicodeDecodeError:
            raise FileFormatError(f"{path}: weights manifest line {lineno}: not ASCII") from None
        offset = newline + 1
        if lineno == 1:
            if line != f"{_ARCHIVE_TAG} {_ARCHIVE_VERSION}":
                raise FileFormatError(
                    f"{path}: weights manifest line 1: expected '{_ARCHIVE_TAG} {_ARCHIVE_VERSION}', got {line!r}"
                )
            continue
        if line == "END":
            saw_end = True
            break
        parts = line.split()
        if len(parts) != 4 or parts[0] != "matrix":
            raise FileFormatError(
                f"{path}: weights manifest line {lineno}: expected 'matrix ROLE ROWS COLS', got {line!r}"
            )
        role = parts[1]
        if role not in GRU_ROLES:
            raise FileFormatError(f"{path}: weights manifest line {lineno}: unknown role {role!r}")
        if role in shapes:
            raise FileFormatError(f"{path}: weights manifest line {lineno}: duplicate role {role!r}")
        try:
            rows, cols = int(parts[2]), int(parts[3])
        except ValueError:
            raise FileFormatError(
                f"{path}: weights manifest line {lineno}: bad shape in {line!r}"
            ) from None
        shapes[role] = (rows, cols)
        order.append(role)
    if not saw_end:
        raise FileFormatError(f"{path}: weights manifest line {lineno + 1}: missing END")
    missing = [role for role in GRU_ROLES if role not in shapes]
    if missing:
        raise FileFormatError(f"{path}: weights manifest: missing roles {missing}")

    by_role: dict[str, np.ndarray] = {}
    for role in order:
        rows, cols = shapes[role]
        block_end = offset + 16 + 4 * rows * cols
        values = matrix_from_bytes(data, offset, min(block_end, len(data)))
        if values.shape != (rows, cols):
            raise FileFormatError(
                f"{path}: block for {role} has shape {values.shape}, manifest says {(rows, cols)}"
            )
        by_role[role] = values
        offset = block_end
    if offset != len(data):
        raise FileFormatError(f"{path}: {len(data) - offset} trailing bytes after byte {offset}")

    hidden, input_dim = shapes["U_r"][0], shapes["W_r"][1]
    return GruWeights(
        u_r=by_role["U_r"], u_z=by_role["U_z"], u=by_role["U"],
        w_r=by_role["W_r"], w_z=by_role["W_z"], w=by_role["W"],
        hidden=hidden, input=input_dim,
    )
