"""Question answering routed by category over keyframes or whole videos.

Keyframe targets get a single provider call. Video targets sample keyframes
at evenly spaced timestamp quantiles, query each frame concurrently, and
aggregate by case-folded exact-match majority vote with the earliest frame
breaking ties. Low-agreement votes are flagged so the UI can hand the
judgment back to the human.
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass
from enum import Enum
from typing import Protocol

import httpx

from .errors import DeadlineExceeded, EmptyQuestion, NoKeyframes, ProviderUnavailable
from .ingest import Catalog, Keyframe

COUNT_PATTERNS = ("how many", "number of")


class QaCategory(Enum):
    COUNTING = "counting"
    IMAGE_INFO = "image_info"
    VIDEO_INFO = "video_info"


@dataclass(frozen=True)
class QaRequest:
    question: str
    keyframe_id: str | None = None
    video_id: str | None = None
    max_frames: int = 5

    def __post_init__(self):
        if not self.question.strip():
            raise EmptyQuestion("question must be nonempty")
        if (self.keyframe_id is None) == (self.video_id is None):
            raise ValueError("exactly one of keyframe_id or video_id required")
        if self.max_frames < 1:
            raise ValueError(f"max_frames must be >= 1, got {self.max_frames}")


@dataclass(frozen=True)
class QaAnswer:
    text: str
    category: QaCategory
    per_frame: list[tuple[str, str]]  # (keyframe_id, raw_answer)
    latency_ms: int
    low_agreement: bool


class QaProvider(Protocol):
    def answer(self, image_ref: str, question: str) -> str: ...


class MockQaProvider:
    """Deterministic answers from an explicit mapping or a keyed-hash fallback."""

    _FALLBACK = ("two", "three", "red", "blue", "a street", "a person", "yes", "no")

    def __init__(self, answers: dict[tuple[str, str], str] | None = None, constant: str | None = None):
        self.answers = dict(answers or {})
        self.constant = constant

    def answer(self, image_ref: str, question: str) -> str:
        if self.constant is not None:
            return self.constant
        explicit = self.answers.get((image_ref, question))
        if explicit is not None:
            return explicit
        digest = hashlib.blake2b(
            f"{image_ref}\x00{question}".encode("utf-8"), key=b"fusionkit-mock-qa", digest_size=1
        ).digest()[0]
        return self._FALLBACK[digest % len(self._FALLBACK)]


class HttpQaProvider:
    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def answer(self, image_ref: str, question: str) -> str:
        try:
            resp = httpx.post(
                f"{self.base_url}/qa",
                json={"image_ref": image_ref, "question": question},
                timeout=self.timeout_s,
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"qa provider unreachable: {exc}") from None
        if resp.status_code != 200:
            raise ProviderUnavailable(f"qa provider returned {resp.status_code}")
        try:
            return str(resp.json()["answer"])
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"qa provider returned bad body: {exc}") from None


def classify_question(question: str, video_target: bool = False) -> QaCategory:
    """Counting when a count-interrogative pattern matches; otherwise the
    target kind decides between video- and image-information extraction."""
    folded = question.casefold().strip()
    if not folded:
        raise EmptyQuestion("question must be nonempty")
    if any(p in folded for p in COUNT_PATTERNS):
        return QaCategory.COUNTING
    return QaCategory.VIDEO_INFO if video_target else QaCategory.IMAGE_INFO


def sample_frames(video_id: str, catalog: Catalog, n: int) -> list[Keyframe]:
    """min(n, available) keyframes at evenly spaced timestamp quantiles.

    Quantile rule: for m available frames sorted by timestamp, quantile q
    maps to index floor(q * (m - 1) + 0.5); n == 1 uses q = 0.5 (the upper
    median). Deterministic for a given catalog.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    frames = catalog.keyframes_for(video_id)
    if not frames:
        raise NoKeyframes(video_id)
    m = len(frames)
    if n >= m:
        return frames
    quantiles = [0.5] if n == 1 else [i / (n - 1) for i in range(n)]
    indices = [int(q * (m - 1) + 0.5) for q in quantiles]
    return [frames[i] for i in indices]


def aggregate_answers(answers: list[tuple[Keyframe, str]]) -> tuple[str, bool]:
    """Case-folded exact-match majority vote; earliest frame breaks ties.

    Returns (winning raw answer, low_agreement). The winning text is the raw
    answer of the earliest-timestamp frame inside the winning group, so the
    result depends only on the answer multiset and timestamps, never on
    input order. low_agreement is set when the winner lacks a strict
    majority.
    """
    if not answers:
        raise ValueError("no answers to aggregate")
    groups: dict[str, list[tuple[int, str]]] = {}
    for kf, raw in answers:
        groups.setdefault(raw.casefold(), []).append((kf.timestamp_ms, raw))
    winner = max(groups.values(), key=lambda g: (len(g), -min(ts for ts, _ in g)))
    text = min(winner)[1]
    low_agreement = len(winner) < len(answers) // 2 + 1
    return text, low_agreement


def answer(
    request: QaRequest,
    qa_provider: QaProvider,
    catalog: Catalog,
    deadline_ms: int | None = None,
    concurrency: int = 4,
) -> QaAnswer:
    """Answer over one keyframe or an evenly sampled set of a video's frames.

    Issues at most max_frames provider calls (exactly one for keyframe
    targets). Raises DeadlineExceeded with whatever per-frame answers
    completed when the configured deadline fires.
    """
    started = time.perf_counter()

    def elapsed_ms() -> int:
        return int((time.perf_counter() - started) * 1000)

    if request.keyframe_id is not None:
        kf = catalog.keyframe(request.keyframe_id)
        category = classify_question(request.question, video_target=False)
        raw = qa_provider.answer(kf.image_uri, request.question)
        return QaAnswer(raw, category, [(kf.keyframe_id, raw)], elapsed_ms(), low_agreement=False)

    category = classify_question(request.question, video_target=True)
    frames = sample_frames(request.video_id, catalog, request.max_frames)

    pool = ThreadPoolExecutor(max_workers=max(1, concurrency))
    try:
        futures = {pool.submit(qa_provider.answer, kf.image_uri, request.question): kf for kf in frames}
        timeout = None if deadline_ms is None else deadline_ms / 1000.0
        done, not_done = wait(futures, timeout=timeout, return_when=FIRST_EXCEPTION)
        for fut in done:
            exc = fut.exception()
            if exc is not None:
                raise exc
        collected = [(futures[fut], fut.result()) for fut in done]
        if not_done:
            partial = sorted(collected, key=lambda p: p[0].timestamp_ms)
            raise DeadlineExceeded(
                f"deadline of {deadline_ms} ms fired with {len(not_done)} calls outstanding",
                per_frame=[(kf.keyframe_id, raw) for kf, raw in partial],
            )
    finally:
        pool.shutdown(wait=False, cancel_futures=True)

    # keep per-frame report in frame order, not completion order
    collected = [(kf, raw) for kf, raw in sorted(collected, key=lambda p: p[0].timestamp_ms)]
    text, low_agreement = aggregate_answers(collected)
    return QaAnswer(
        text,
        category,
        [(kf.keyframe_id, raw) for kf, raw in collected],
        elapsed_ms(),
        low_agreement=low_agreement,
    )
