"""Assembles catalog, vector spaces, text index, and providers into one engine.

A corpus directory is the unit of deployment:

    <corpus>/catalog.tsv            video records
    <corpus>/maps/<video_id>.map    timestamp maps
    <corpus>/stores/spaces.txt      the two model space ids, in fusion order
    <corpus>/stores/<model_id>.fvs  vector store per space (+ .ids sidecar)
    <corpus>/segments.jsonl         OCR/ASR text segments (optional)

Rebuilds replace store files atomically; a running engine swaps to a new
snapshot in one assignment, so in-flight searches finish on the old one.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np

from . import qa as qa_mod
from . import rerank as rerank_mod
from .config import ServiceConfig
from .embedding import (
    EmbeddingProvider,
    EmbedRequest,
    HttpEmbeddingProvider,
    MockEmbeddingProvider,
    VectorStore,
    embed,
)
from .errors import (
    BadQuestionCount,
    DimMismatch,
    EmptySpace,
    FusionkitError,
    InvalidQuery,
    UnknownKeyframe,
)
from .ingest import Catalog
from .qa import HttpQaProvider, MockQaProvider, QaAnswer, QaRequest
from .rerank import (
    ClarificationQuestion,
    HttpQuestionProvider,
    HttpVqaProvider,
    MockQuestionProvider,
    MockVqaProvider,
    RerankResult,
    VqaAnswer,
)
from .search import (
    FusionWeights,
    ScoredHit,
    SearchSpace,
    VideoGroup,
    fused_score,
    group_by_video,
    search_fused,
    search_image,
)
from .textindex import InvertedIndex, Source, load_segments_jsonl

SPACES_MANIFEST = "spaces.txt"


def build_vector_stores(
    catalog: Catalog,
    provider: EmbeddingProvider,
    spaces: list[tuple[str, int]],
    out_dir,
    batch_size: int = 64,
) -> dict[str, int]:
    """Embed every keyframe image ref into each space and write the stores.

    Rebuilds are atomic (temp files swapped in) and byte-deterministic for
    a deterministic provider. Raises DimMismatch when an existing store for
    the same model id was built with a different dim.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keyframes = sorted(catalog.all_keyframes(), key=lambda kf: kf.keyframe_id)
    counts: dict[str, int] = {}
    for model_id, dim in spaces:
        final = out / f"{model_id}.fvs"
        if final.exists():
            existing = VectorStore.open(final)
            existing.close()
            if existing.dim != dim:
                raise DimMismatch(existing.dim, dim)
        tmp = out / f"{model_id}.fvs.tmp"
        store = VectorStore.create(tmp, model_id, dim)
        try:
            for start in range(0, len(keyframes), batch_size):
                batch = keyframes[start : start + batch_size]
                vectors = embed(
                    provider,
                    EmbedRequest(model_id, image_refs=tuple(kf.image_uri for kf in batch)),
                    expected_dim=dim,
                )
                for kf, vec in zip(batch, vectors):
                    store.append(kf.keyframe_id, vec)
        finally:
            store.close()
        os.replace(tmp, final)
        os.replace(f"{tmp}.ids", f"{final}.ids")
        counts[model_id] = len(keyframes)
    (out / SPACES_MANIFEST).write_text("".join(f"{m}\n" for m, _ in spaces), encoding="utf-8")
    return counts


def _make_embed_provider(config: ServiceConfig, dims: dict[str, int]) -> EmbeddingProvider:
    if config.embed_provider == "mock":
        return MockEmbeddingProvider(dims)
    return HttpEmbeddingProvider(config.embed_provider, config.provider_timeout_ms / 1000.0)


@dataclass
class _CorpusSnapshot:
    """One immutable view of the loaded corpus; swapped in a single assignment
    so readers never observe a half-loaded mix of old and new state."""

    catalog: Catalog
    space_a: SearchSpace | None
    space_b: SearchSpace | None
    text_index: InvertedIndex


class Engine:
    """Query-side facade used by the HTTP service and the CLI."""

    def __init__(self, config: ServiceConfig | None = None):
        self.config = config or ServiceConfig()
        self._corpus = _CorpusSnapshot(Catalog(), None, None, InvertedIndex())
        self._vqa_cache: dict[tuple[str, str], VqaAnswer] = {}
        self.embed_provider: EmbeddingProvider = _make_embed_provider(self.config, {})
        cfg = self.config
        self.qgen_provider = (
            MockQuestionProvider()
            if cfg.qgen_provider == "mock"
            else HttpQuestionProvider(cfg.qgen_provider, cfg.provider_timeout_ms / 1000.0)
        )
        self.vqa_provider = (
            MockVqaProvider()
            if cfg.vqa_provider == "mock"
            else HttpVqaProvider(cfg.vqa_provider, cfg.provider_timeout_ms / 1000.0)
        )
        self.qa_provider = (
            MockQaProvider()
            if cfg.qa_provider == "mock"
            else HttpQaProvider(cfg.qa_provider, cfg.provider_timeout_ms / 1000.0)
        )

    # -- corpus loading --

    @property
    def catalog(self) -> Catalog:
        return self._corpus.catalog

    @catalog.setter
    def catalog(self, catalog: Catalog) -> None:
        old = self._corpus
        self._corpus = _CorpusSnapshot(catalog, old.space_a, old.space_b, old.text_index)

    @property
    def text_index(self) -> InvertedIndex:
        return self._corpus.text_index

    @text_index.setter
    def text_index(self, index: InvertedIndex) -> None:
        old = self._corpus
        self._corpus = _CorpusSnapshot(old.catalog, old.space_a, old.space_b, index)

    def load_corpus(self, corpus_dir) -> None:
        root = Path(corpus_dir)
        catalog = Catalog.load(root)
        stores_dir = root / "stores"
        space_a = space_b = None
        if (stores_dir / SPACES_MANIFEST).exists():
            model_ids = (stores_dir / SPACES_MANIFEST).read_text(encoding="utf-8").split()
            if len(model_ids) != 2:
                raise FusionkitError(f"{stores_dir}: expected exactly 2 spaces, found {len(model_ids)}")
            loaded = []
            for model_id in model_ids:
                store = VectorStore.open(stores_dir / f"{model_id}.fvs")
                loaded.append(SearchSpace.from_store(store))
                store.close()
            space_a, space_b = loaded
        text_index = InvertedIndex()
        segments_path = root / "segments.jsonl"
        if segments_path.exists():
            for seg in load_segments_jsonl(segments_path):
                text_index.index_segment(seg)
        # single assignment: in-flight requests finish on the old snapshot
        self._corpus = _CorpusSnapshot(catalog, space_a, space_b, text_index)
        if self.config.embed_provider == "mock" and space_a is not None and space_b is not None:
            self.embed_provider = MockEmbeddingProvider(
                {space_a.model_id: space_a.dim, space_b.model_id: space_b.dim}
            )

    def set_spaces(self, space_a: SearchSpace, space_b: SearchSpace) -> None:
        old = self._corpus
        self._corpus = _CorpusSnapshot(old.catalog, space_a, space_b, old.text_index)
        if self.config.embed_provider == "mock":
            self.embed_provider = MockEmbeddingProvider(
                {space_a.model_id: space_a.dim, space_b.model_id: space_b.dim}
            )

    @property
    def index_ready(self) -> bool:
        corpus = self._corpus
        return corpus.space_a is not None and corpus.space_b is not None

    @property
    def text_ready(self) -> bool:
        return self.text_index.segment_count > 0

    # -- search --

    def _require_spaces(self) -> tuple[SearchSpace, SearchSpace]:
        corpus = self._corpus
        if corpus.space_a is None or corpus.space_b is None:
            raise EmptySpace("vector index not built")
        return corpus.space_a, corpus.space_b

    def search(self, text: str, k: int | None = None, alpha: float | None = None) -> list[ScoredHit]:
        space_a, space_b = self._require_spaces()
        weights = FusionWeights(self.config.alpha if alpha is None else alpha)
        k = self.config.k if k is None else k
        return search_fused(
            self.embed_provider, space_a, space_b, text, weights, k, pool=self.config.pool_factor * k
        )

    def search_by_image(self, image_ref: str, k: int | None = None, alpha: float | None = None) -> list[ScoredHit]:
        space_a, space_b = self._require_spaces()
        weights = FusionWeights(self.config.alpha if alpha is None else alpha)
        k = self.config.k if k is None else k
        return search_image(
            self.embed_provider, space_a, space_b, image_ref, weights, k, pool=self.config.pool_factor * k
        )

    def group(self, hits: list[ScoredHit], per_video_cap: int | None = None) -> list[VideoGroup]:
        cap = self.config.per_video_cap if per_video_cap is None else per_video_cap
        return group_by_video(hits, self.catalog, cap)

    def search_text(self, query: str, source: str | None = None, k: int = 10):
        source_filter = Source(source) if source else None
        return self.text_index.search_text(query, source_filter, k)

    def hit_payload(self, hit: ScoredHit) -> dict:
        kf = self.catalog.keyframe(hit.keyframe_id)
        return {
            "keyframe_id": hit.keyframe_id,
            "video_id": kf.video_id,
            "timestamp_ms": kf.timestamp_ms,
            "score_a": hit.score_a,
            "score_b": hit.score_b,
            "fused": hit.fused,
        }

    # -- rerank --

    def rerank_questions(self, query: str) -> list[ClarificationQuestion]:
        return rerank_mod.generate_questions(query, self.qgen_provider)

    def scored_hits_for(self, query: str, keyframe_ids: list[str], alpha: float | None = None) -> list[ScoredHit]:
        """Exact two-space scores for explicit keyframes, preserving input order."""
        space_a, space_b = self._require_spaces()
        weights = FusionWeights(self.config.alpha if alpha is None else alpha)
        query_a = embed(self.embed_provider, EmbedRequest(space_a.model_id, texts=(query,)), space_a.dim)[0]
        query_b = embed(self.embed_provider, EmbedRequest(space_b.model_id, texts=(query,)), space_b.dim)[0]
        for kf_id in keyframe_ids:
            if kf_id not in space_a.row_of or kf_id not in space_b.row_of:
                raise UnknownKeyframe(kf_id)
        rows_a = np.array([space_a.row_of[kf_id] for kf_id in keyframe_ids], dtype=np.int64)
        rows_b = np.array([space_b.row_of[kf_id] for kf_id in keyframe_ids], dtype=np.int64)
        scores_a = space_a.exact_scores(query_a.values.astype(np.float64), rows_a)
        scores_b = space_b.exact_scores(query_b.values.astype(np.float64), rows_b)
        return [
            ScoredHit(kf_id, float(sa), float(sb), fused_score(weights.alpha, float(sa), float(sb)))
            for kf_id, sa, sb in zip(keyframe_ids, scores_a, scores_b)
        ]

    def rerank_execute(
        self,
        query: str,
        question_texts: list[str],
        keyframe_ids: list[str],
        budget: int | None = None,
    ) -> RerankResult:
        if not keyframe_ids:
            raise InvalidQuery("hits must be non-empty")
        if len(question_texts) != rerank_mod.QUESTION_COUNT:
            raise BadQuestionCount(len(question_texts))
        questions = [
            ClarificationQuestion(t.strip() if t.strip().endswith("?") else t.strip() + "?", i)
            for i, t in enumerate(question_texts)
        ]
        hits = self.scored_hits_for(query, keyframe_ids)
        return rerank_mod.rerank(
            hits,
            questions,
            self.vqa_provider,
            budget=budget if budget is not None else len(hits),
            image_ref_for=lambda kf_id: self.catalog.keyframe(kf_id).image_uri,
            concurrency=self.config.vqa_concurrency,
            cache=self._vqa_cache,
        )

    # -- qa --

    def answer(self, request: QaRequest) -> QaAnswer:
        return qa_mod.answer(
            request,
            self.qa_provider,
            self.catalog,
            deadline_ms=self.config.qa_deadline_ms,
            concurrency=self.config.vqa_concurrency,
        )

    # -- status --

    def provider_health(self) -> dict[str, dict]:
        out = {}
        for name, spec in (
            ("embed", self.config.embed_provider),
            ("qgen", self.config.qgen_provider),
            ("vqa", self.config.vqa_provider),
            ("qa", self.config.qa_provider),
        ):
            if spec == "mock":
                out[name] = {"kind": "mock", "reachable": True}
            else:
                started = time.perf_counter()
                try:
                    httpx.get(spec, timeout=2.0)
                    reachable = True
                except httpx.HTTPError:
                    reachable = False
                out[name] = {
                    "kind": "http",
                    "reachable": reachable,
                    "checked_in_ms": int((time.perf_counter() - started) * 1000),
                }
        return out
