"""Exact top-k cosine search per model space and two-space late fusion.

Scores are cosine similarities accumulated in 64-bit floats. The flat scan
prefilters candidates with a float32 matrix-vector product, then re-scores
the survivors exactly in float64; the prefilter margin exceeds the worst
case float32 accumulation error by more than an order of magnitude, so
results are identical to a full float64 scan, including tie-breaks.

Fusion combines the two per-space scores as
``alpha * score_a + (1 - alpha) * score_b`` over the union of each space's
exact top-pool candidates, with both exact scores fetched for every
candidate. All orderings break ties by keyframe_id ascending.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingProvider, EmbeddingVector, EmbedRequest, embed
from .errors import DimMismatch, EmptySpace, InvalidQuery, SpaceMismatch
from .ingest import Catalog

DEFAULT_ALPHA = 0.7
DEFAULT_POOL_FACTOR = 10


@dataclass(frozen=True)
class FusionWeights:
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidQuery(f"alpha must be within [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class ScoredHit:
    keyframe_id: str
    score_a: float
    score_b: float
    fused: float


@dataclass(frozen=True)
class VideoGroup:
    video_id: str
    hits: list[ScoredHit]
    best: float


def fused_score(alpha: float, score_a: float, score_b: float) -> float:
    return alpha * score_a + (1.0 - alpha) * score_b


def _scan_margin(dim: int) -> float:
    # >= 32x the float32 dot-product error bound (dim * 2^-24 for unit vectors)
    return max(1e-3, 32.0 * dim * 2.0**-24)


class SearchSpace:
    """One model space held in memory: float32 matrix plus keyframe ordering."""

    def __init__(self, model_id: str, ids: list[str], matrix: np.ndarray):
        if matrix.ndim != 2 or matrix.shape[0] != len(ids):
            raise ValueError(f"matrix shape {matrix.shape} does not match {len(ids)} ids")
        self.model_id = model_id
        self.ids = list(ids)
        self.matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if len(ids):
            norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
            worst = int(np.argmax(np.abs(norms - 1.0)))
            if abs(norms[worst] - 1.0) > 1e-5:
                raise ValueError(
                    f"row {worst} ({ids[worst]!r}) has norm {norms[worst]:.8f}, not unit"
                )
        self.row_of = {kf_id: i for i, kf_id in enumerate(ids)}
        if len(self.row_of) != len(ids):
            raise ValueError("duplicate keyframe ids in space")
        self._ids_arr = np.array(ids) if ids else np.array([], dtype=str)
        # order-insensitive digest for O(1) coverage comparison between spaces
        digest = 0
        for kf_id in ids:
            digest ^= int.from_bytes(hashlib.blake2b(kf_id.encode("utf-8"), digest_size=16).digest(), "little")
        self.ids_digest = digest

    @classmethod
    def from_store(cls, store) -> "SearchSpace":
        ids, matrix = store.load_matrix()
        return cls(store.model_id, ids, matrix)

    @property
    def count(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def exact_scores(self, query64: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Float64-accumulated cosine scores for the given rows."""
        return self.matrix[rows].astype(np.float64) @ query64

    def top(self, query: EmbeddingVector, m: int) -> list[tuple[int, float]]:
        """Exact top-m rows by (score desc, keyframe_id asc)."""
        if self.count == 0:
            raise EmptySpace(f"space {self.model_id!r} holds no vectors")
        if query.dim != self.dim:
            raise DimMismatch(self.dim, query.dim)
        q64 = query.values.astype(np.float64)
        n = self.count
        if m >= n:
            cand = np.arange(n)
        else:
            approx = self.matrix @ query.values
            part = np.argpartition(-approx, m - 1)[:m]
            thresh = float(approx[part].min()) - _scan_margin(self.dim)
            cand = np.flatnonzero(approx >= thresh)
        exact = self.exact_scores(q64, cand)
        order = np.lexsort((self._ids_arr[cand], -exact))[:m]
        return [(int(cand[j]), float(exact[j])) for j in order]


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors, accumulated in float64."""
    if a.dim != b.dim:
        raise DimMismatch(a.dim, b.dim)
    return float(a.values.astype(np.float64) @ b.values.astype(np.float64))


def search_space(query: EmbeddingVector, space: SearchSpace, k: int) -> list[tuple[str, float]]:
    """Exact top-k over one space; returns min(k, count) (keyframe_id, score) pairs."""
    if k < 1:
        raise InvalidQuery(f"k must be >= 1, got {k}")
    return [(space.ids[row], score) for row, score in space.top(query, k)]


def fuse(
    space_a: SearchSpace,
    space_b: SearchSpace,
    query_a: EmbeddingVector,
    query_b: EmbeddingVector,
    weights: FusionWeights,
    k: int,
    pool: int | None = None,
) -> list[ScoredHit]:
    """Late fusion: union of per-space top-pool candidates, exactly re-scored
    in both spaces, ranked by the fused score.

    With pool >= count this is an exhaustive fused scan.
    """
    if k < 1:
        raise InvalidQuery(f"k must be >= 1, got {k}")
    if space_a.count == 0 or space_b.count == 0:
        raise EmptySpace("both spaces must hold vectors")
    if space_a.count != space_b.count or space_a.ids_digest != space_b.ids_digest:
        raise SpaceMismatch(
            f"spaces cover different keyframe sets ({space_a.count} vs {space_b.count} rows)"
        )
    pool = max(k, pool if pool is not None else DEFAULT_POOL_FACTOR * k)

    top_a = space_a.top(query_a, pool)
    top_b = space_b.top(query_b, pool)
    cand_ids = sorted(
        {space_a.ids[row] for row, _ in top_a} | {space_b.ids[row] for row, _ in top_b}
    )

    qa64 = query_a.values.astype(np.float64)
    qb64 = query_b.values.astype(np.float64)
    rows_a = np.fromiter((space_a.row_of[kf] for kf in cand_ids), dtype=np.int64, count=len(cand_ids))
    rows_b = np.fromiter((space_b.row_of[kf] for kf in cand_ids), dtype=np.int64, count=len(cand_ids))
    scores_a = space_a.exact_scores(qa64, rows_a)
    scores_b = space_b.exact_scores(qb64, rows_b)

    hits = [
        ScoredHit(kf, float(sa), float(sb), fused_score(weights.alpha, float(sa), float(sb)))
        for kf, sa, sb in zip(cand_ids, scores_a, scores_b)
    ]
    hits.sort(key=lambda h: (-h.fused, h.keyframe_id))
    return hits[:k]


def search_fused(
    provider: EmbeddingProvider,
    space_a: SearchSpace,
    space_b: SearchSpace,
    text: str,
    weights: FusionWeights,
    k: int,
    pool: int | None = None,
) -> list[ScoredHit]:
    """Embed the text query once per space, then delegate to fuse."""
    if not text.strip():
        raise InvalidQuery("query text is empty")
    if k < 1:
        raise InvalidQuery(f"k must be >= 1, got {k}")
    query_a = embed(provider, EmbedRequest(space_a.model_id, texts=(text,)), expected_dim=space_a.dim)[0]
    query_b = embed(provider, EmbedRequest(space_b.model_id, texts=(text,)), expected_dim=space_b.dim)[0]
    return fuse(space_a, space_b, query_a, query_b, weights, k, pool)


def search_image(
    provider: EmbeddingProvider,
    space_a: SearchSpace,
    space_b: SearchSpace,
    image_ref: str,
    weights: FusionWeights,
    k: int,
    pool: int | None = None,
) -> list[ScoredHit]:
    """Image-to-image retrieval: embed the reference per space, then fuse."""
    if not image_ref.strip():
        raise InvalidQuery("image_ref is empty")
    if k < 1:
        raise InvalidQuery(f"k must be >= 1, got {k}")
    query_a = embed(provider, EmbedRequest(space_a.model_id, image_refs=(image_ref,)), expected_dim=space_a.dim)[0]
    query_b = embed(provider, EmbedRequest(space_b.model_id, image_refs=(image_ref,)), expected_dim=space_b.dim)[0]
    return fuse(space_a, space_b, query_a, query_b, weights, k, pool)


def group_by_video(hits: list[ScoredHit], catalog: Catalog, per_video_cap: int) -> list[VideoGroup]:
    """Group hits by parent video, best-first, capping hits per group."""
    if per_video_cap < 1:
        raise InvalidQuery(f"per_video_cap must be >= 1, got {per_video_cap}")
    by_video: dict[str, list[ScoredHit]] = {}
    for hit in hits:
        video_id = catalog.keyframe(hit.keyframe_id).video_id
        by_video.setdefault(video_id, []).append(hit)
    groups = []
    for video_id, group_hits in by_video.items():
        ordered = sorted(group_hits, key=lambda h: -h.fused)[:per_video_cap]
        groups.append(VideoGroup(video_id, ordered, best=max(h.fused for h in group_hits)))
    groups.sort(key=lambda g: (-g.best, g.video_id))
    return groups
