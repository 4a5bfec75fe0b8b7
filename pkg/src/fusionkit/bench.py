"""Self-measured latency benchmarks backing the efficiency claims.

The fused benchmark times a top-k fused query over two synthetic spaces;
the text benchmark times BM25 search over synthetic OCR/ASR segments. BLAS
thread pools are pinned to one thread during measurement so the numbers
reflect single-threaded behavior.
"""

from __future__ import annotations

import contextlib
import time

import numpy as np

from .embedding import EmbeddingVector
from .search import FusionWeights, SearchSpace, fuse
from .textindex import InvertedIndex, Source, TextSegment


@contextlib.contextmanager
def single_threaded_blas():
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - present in the dev environment
        yield
        return
    with threadpool_limits(limits=1):
        yield


def _random_unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    mat = rng.standard_normal((n, dim), dtype=np.float32)
    mat /= np.linalg.norm(mat.astype(np.float64), axis=1, keepdims=True).astype(np.float32)
    return mat


def build_synthetic_spaces(items: int, dim: int, seed: int = 7) -> tuple[SearchSpace, SearchSpace]:
    rng = np.random.default_rng(seed)
    ids = [f"kf{i:07d}" for i in range(items)]
    return (
        SearchSpace("space-A", ids, _random_unit_rows(rng, items, dim)),
        SearchSpace("space-B", ids, _random_unit_rows(rng, items, dim)),
    )


def bench_fused(items: int = 100_000, dim: int = 512, k: int = 10, trials: int = 5, seed: int = 7) -> dict:
    """Time fused top-k queries over two freshly built spaces."""
    space_a, space_b = build_synthetic_spaces(items, dim, seed)
    rng = np.random.default_rng(seed + 1)
    weights = FusionWeights()

    def one_query() -> float:
        qa = EmbeddingVector("space-A", _random_unit_rows(rng, 1, dim)[0])
        qb = EmbeddingVector("space-B", _random_unit_rows(rng, 1, dim)[0])
        started = time.perf_counter()
        fuse(space_a, space_b, qa, qb, weights, k)
        return (time.perf_counter() - started) * 1000.0

    with single_threaded_blas():
        one_query()  # warmup: page in both matrices
        times = [one_query() for _ in range(trials)]
    return {
        "items": items,
        "dim": dim,
        "k": k,
        "trial_ms": [round(t, 2) for t in times],
        "best_ms": round(min(times), 2),
        "median_ms": round(sorted(times)[len(times) // 2], 2),
    }


def build_synthetic_text_index(segments: int, seed: int = 7) -> tuple[InvertedIndex, list[str]]:
    """Index synthetic segments; returns the index and a high-df query term list."""
    rng = np.random.default_rng(seed)
    common = [f"common{i}" for i in range(10)]
    vocab = [f"word{i}" for i in range(5000)]
    index = InvertedIndex()
    for i in range(segments):
        length = int(rng.integers(8, 21))
        words = [
            common[int(rng.integers(len(common)))] if rng.random() < 0.2 else vocab[int(rng.integers(len(vocab)))]
            for _ in range(length)
        ]
        index.index_segment(
            TextSegment(
                segment_id=f"seg{i:07d}",
                video_id=f"v{i % 997:04d}",
                source=Source.ASR if i % 2 else Source.OCR,
                text=" ".join(words),
                t_start_ms=i * 10,
                t_end_ms=i * 10 + 5,
            )
        )
    return index, [common[0], common[1], vocab[0]]


def bench_text(segments: int = 100_000, k: int = 10, trials: int = 5, seed: int = 7) -> dict:
    """Time BM25 queries mixing high- and low-frequency terms."""
    index, query_terms = build_synthetic_text_index(segments, seed)
    query = " ".join(query_terms)

    def one_query() -> float:
        started = time.perf_counter()
        index.search_text(query, k=k)
        return (time.perf_counter() - started) * 1000.0

    one_query()  # warmup
    times = [one_query() for _ in range(trials)]
    return {
        "segments": segments,
        "k": k,
        "query": query,
        "trial_ms": [round(t, 3) for t in times],
        "best_ms": round(min(times), 3),
        "median_ms": round(sorted(times)[len(times) // 2], 3),
    }
