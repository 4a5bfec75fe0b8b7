"""Embedding provider contract, deterministic mock provider, and vector store.

Real CLIP-style models live behind the provider wire contract
(``POST /embed``). The mock provider hashes lowercase tokens to fixed
pseudo-random vectors and sums them, so token overlap induces higher cosine
similarity; it is fully deterministic across process restarts.

Vectors are stored as 32-bit floats in a flat single-file-per-space layout
(magic ``FVS1``) with a sidecar file carrying the keyframe-id row ordering.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Protocol, Sequence

import httpx
import numpy as np

from .errors import (
    CorruptStore,
    DimMismatch,
    DuplicateKeyframe,
    NonFiniteOutput,
    ProviderUnavailable,
    UnknownKeyframe,
    ZeroVector,
)
from .textindex import tokenize

STORE_MAGIC = b"FVS1"
STORE_VERSION = 1
UNIT_NORM_TOL = 1e-5

_MOCK_HASH_KEY = b"fusionkit-mock-embed"


@dataclass(frozen=True)
class ModelSpace:
    model_id: str
    dim: int

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"dim must be > 0: {self.dim}")


@dataclass(frozen=True)
class EmbeddingVector:
    model_id: str
    values: np.ndarray  # float32, unit norm

    def __post_init__(self):
        v = self.values
        if v.dtype != np.float32:
            raise ValueError(f"values must be float32, got {v.dtype}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteOutput("vector contains NaN or infinity")
        norm = float(np.linalg.norm(v.astype(np.float64)))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"vector norm {norm} outside 1 +/- {UNIT_NORM_TOL}")

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def normalize(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale to unit norm (float64 arithmetic, float32 result).

    Raises ZeroVector when the norm is zero or non-finite.
    """
    arr = np.asarray(values, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if not np.isfinite(norm):
        raise NonFiniteOutput("vector contains NaN or infinity")
    if norm == 0.0:
        raise ZeroVector("cannot normalize a zero vector")
    return (arr / norm).astype(np.float32)


# --- providers ---------------------------------------------------------------


@dataclass(frozen=True)
class EmbedRequest:
    model_id: str
    texts: tuple[str, ...] | None = None
    image_refs: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.texts is None) == (self.image_refs is None):
            raise ValueError("exactly one of texts or image_refs required")
        payloads = self.texts if self.texts is not None else self.image_refs
        if not payloads:
            raise ValueError("request must be non-empty")

    @property
    def payloads(self) -> tuple[str, ...]:
        return self.texts if self.texts is not None else self.image_refs  # type: ignore[return-value]


class EmbeddingProvider(Protocol):
    def embed_raw(self, request: EmbedRequest) -> list[list[float]]: ...


class MockEmbeddingProvider:
    """Deterministic bag-of-token embedder for the registered model spaces.

    Each lowercase token hashes (keyed blake2b, fixed key) to a seed for a
    PCG64 stream producing a dim-length Gaussian vector; token vectors are
    summed and unit-normalized. Texts and image refs go through the same
    tokenizer, so an index built from descriptive image refs is retrievable
    by the same words as text.
    """

    def __init__(self, dims: dict[str, int]):
        self.dims = dict(dims)
        self._cache: dict[tuple[str, str], np.ndarray] = {}

    def _token_vector(self, model_id: str, token: str, dim: int) -> np.ndarray:
        key = (model_id, token)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        digest = hashlib.blake2b(
            f"{model_id}\x00{token}".encode("utf-8"), key=_MOCK_HASH_KEY, digest_size=8
        ).digest()
        seed = int.from_bytes(digest, "little")
        vec = np.random.Generator(np.random.PCG64(seed)).standard_normal(dim)
        self._cache[key] = vec
        return vec

    def embed_raw(self, request: EmbedRequest) -> list[list[float]]:
        dim = self.dims.get(request.model_id)
        if dim is None:
            raise ProviderUnavailable(f"mock provider has no model {request.model_id!r}")
        out: list[list[float]] = []
        for payload in request.payloads:
            tokens = tokenize(payload) or [payload]
            acc = np.zeros(dim, dtype=np.float64)
            for tok in tokens:
                acc += self._token_vector(request.model_id, tok, dim)
            out.append(normalize(acc).tolist())
        return out


class HttpEmbeddingProvider:
    """Client for the provider wire protocol: POST /embed -> {"vectors": [...]}."""

    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def embed_raw(self, request: EmbedRequest) -> list[list[float]]:
        body: dict = {"model_id": request.model_id}
        if request.texts is not None:
            body["texts"] = list(request.texts)
        else:
            body["image_refs"] = list(request.image_refs or ())
        try:
            resp = httpx.post(f"{self.base_url}/embed", json=body, timeout=self.timeout_s)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"embed provider unreachable: {exc}") from None
        if resp.status_code != 200:
            raise ProviderUnavailable(f"embed provider returned {resp.status_code}")
        try:
            vectors = resp.json()["vectors"]
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"embed provider returned bad body: {exc}") from None
        return vectors


def embed(provider: EmbeddingProvider, request: EmbedRequest, expected_dim: int | None = None) -> list[EmbeddingVector]:
    """Embed texts or image refs, validating dim, finiteness, and unit norm.

    Provider outputs are defensively re-normalized; one vector is returned
    per input payload.
    """
    raw = provider.embed_raw(request)
    if len(raw) != len(request.payloads):
        raise ProviderUnavailable(f"provider returned {len(raw)} vectors for {len(request.payloads)} inputs")
    out: list[EmbeddingVector] = []
    for values in raw:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1:
            raise ProviderUnavailable("provider returned a non-flat vector")
        if expected_dim is not None and arr.shape[0] != expected_dim:
            raise DimMismatch(expected_dim, int(arr.shape[0]))
        if not np.all(np.isfinite(arr)):
            raise NonFiniteOutput("provider returned NaN or infinity")
        out.append(EmbeddingVector(request.model_id, normalize(arr)))
    return out


# --- vector store --------------------------------------------------------------

_HEADER_FIXED = struct.Struct("<4sHH")  # magic, version, model_id byte length
_HEADER_TAIL = struct.Struct("<IQ")  # dim, count


class VectorStore:
    """Flat binary store: fixed-width float32 rows plus a sidecar id file.

    Row i belongs to the i-th keyframe_id in the sidecar; appends are
    single-writer, lookups O(1) by row offset.
    """

    def __init__(self, path, model_id: str, dim: int, ids: list[str], mode: str):
        self.path = Path(path)
        self.ids_path = Path(str(path) + ".ids")
        self.model_id = model_id
        self.dim = dim
        self._ids = ids
        self._index = {kf_id: i for i, kf_id in enumerate(ids)}
        if len(self._index) != len(ids):
            raise CorruptStore(f"{self.ids_path}: duplicate keyframe ids")
        self._row_bytes = dim * 4
        self._model_bytes = model_id.encode("utf-8")
        self._header_size = _HEADER_FIXED.size + len(self._model_bytes) + _HEADER_TAIL.size
        self._file = open(self.path, "r+b" if mode == "append" else "rb")
        self._ids_file = open(self.ids_path, "a", encoding="utf-8") if mode == "append" else None

    # -- construction --

    @classmethod
    def create(cls, path, model_id: str, dim: int) -> "VectorStore":
        if dim <= 0:
            raise ValueError(f"dim must be > 0: {dim}")
        model_bytes = model_id.encode("utf-8")
        with open(path, "wb") as f:
            f.write(_HEADER_FIXED.pack(STORE_MAGIC, STORE_VERSION, len(model_bytes)))
            f.write(model_bytes)
            f.write(_HEADER_TAIL.pack(dim, 0))
        Path(str(path) + ".ids").write_text("", encoding="utf-8")
        return cls(path, model_id, dim, [], mode="append")

    @classmethod
    def open(cls, path, mode: str = "read") -> "VectorStore":
        path = Path(path)
        ids_path = Path(str(path) + ".ids")
        try:
            with open(path, "rb") as f:
                fixed = f.read(_HEADER_FIXED.size)
                if len(fixed) < _HEADER_FIXED.size:
                    raise CorruptStore(f"{path}: truncated header")
                magic, version, model_len = _HEADER_FIXED.unpack(fixed)
                if magic != STORE_MAGIC:
                    raise CorruptStore(f"{path}: bad magic {magic!r}")
                if version != STORE_VERSION:
                    raise CorruptStore(f"{path}: unsupported version {version}")
                model_id = f.read(model_len).decode("utf-8")
                tail = f.read(_HEADER_TAIL.size)
                if len(tail) < _HEADER_TAIL.size:
                    raise CorruptStore(f"{path}: truncated header")
                dim, count = _HEADER_TAIL.unpack(tail)
        except OSError as exc:
            raise CorruptStore(f"{path}: {exc}") from None
        header_size = _HEADER_FIXED.size + model_len + _HEADER_TAIL.size
        expected = header_size + count * dim * 4
        actual = path.stat().st_size
        if actual != expected:
            raise CorruptStore(f"{path}: size {actual} does not match header count (expected {expected})")
        if not ids_path.exists():
            raise CorruptStore(f"{ids_path}: missing sidecar")
        ids = ids_path.read_text(encoding="utf-8").splitlines()
        if len(ids) != count:
            raise CorruptStore(f"{ids_path}: {len(ids)} ids for {count} rows")
        return cls(path, model_id, dim, ids, mode=mode)

    # -- access --

    @property
    def count(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def append(self, keyframe_id: str, vector: EmbeddingVector) -> None:
        if self._ids_file is None:
            raise CorruptStore(f"{self.path}: store opened read-only")
        if vector.dim != self.dim:
            raise DimMismatch(self.dim, vector.dim)
        if keyframe_id in self._index:
            raise DuplicateKeyframe(keyframe_id)
        row = np.ascontiguousarray(vector.values, dtype="<f4").tobytes()
        f = self._file
        f.seek(self._header_size + len(self._ids) * self._row_bytes)
        f.write(row)
        self._index[keyframe_id] = len(self._ids)
        self._ids.append(keyframe_id)
        f.seek(self._header_size - _HEADER_TAIL.size)
        f.write(_HEADER_TAIL.pack(self.dim, len(self._ids)))
        f.flush()
        self._ids_file.write(keyframe_id + "\n")
        self._ids_file.flush()

    def get(self, keyframe_id: str) -> EmbeddingVector:
        row = self._index.get(keyframe_id)
        if row is None:
            raise UnknownKeyframe(keyframe_id)
        self._file.seek(self._header_size + row * self._row_bytes)
        data = self._file.read(self._row_bytes)
        values = np.frombuffer(data, dtype="<f4").astype(np.float32)
        return EmbeddingVector(self.model_id, values)

    def scan(self) -> Iterator[tuple[str, EmbeddingVector]]:
        for kf_id in self._ids:
            yield kf_id, self.get(kf_id)

    def load_matrix(self) -> tuple[list[str], np.ndarray]:
        """All rows as a (count, dim) float32 matrix in insertion order."""
        self._file.seek(self._header_size)
        data = self._file.read(len(self._ids) * self._row_bytes)
        mat = np.frombuffer(data, dtype="<f4").reshape(len(self._ids), self.dim).astype(np.float32)
        return list(self._ids), mat

    def close(self) -> None:
        self._file.close()
        if self._ids_file is not None:
            self._ids_file.close()

    def __enter__(self) -> "VectorStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
