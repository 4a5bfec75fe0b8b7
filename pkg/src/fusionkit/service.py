"""HTTP+JSON API over the engine: fused search, text search, rerank, QA.

All error bodies carry ``{"error": {"code": ..., "message": ...}}``; JSON
field names are snake_case and documented in docs/api-schema.json. Requests
are stateless: identical requests against an unchanged index return
identical bodies under the mock providers.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import Engine
from .errors import (
    BadQuestionCount,
    DeadlineExceeded,
    EmptyQuery,
    EmptyQuestion,
    EmptySpace,
    FusionkitError,
    InvalidQuery,
    NoKeyframes,
    ProviderUnavailable,
    UnknownKeyframe,
)
from .qa import QaAnswer, QaRequest
from .rerank import RerankResult
from .search import ScoredHit, VideoGroup

_ERROR_STATUS: list[tuple[type, int, str]] = [
    (InvalidQuery, 400, "invalid_query"),
    (EmptyQuery, 400, "empty_query"),
    (EmptyQuestion, 400, "empty_question"),
    (BadQuestionCount, 400, "bad_question_count"),
    (ProviderUnavailable, 503, "provider_unavailable"),
    (EmptySpace, 409, "index_not_built"),
    (UnknownKeyframe, 404, "unknown_target"),
    (NoKeyframes, 404, "unknown_target"),
    (DeadlineExceeded, 504, "deadline_exceeded"),
]


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message, **extra}})


class SearchBody(BaseModel):
    text: str
    k: int | None = None
    alpha: float | None = None
    group: bool = False


class TextSearchBody(BaseModel):
    query: str
    source: Literal["ocr", "asr"] | None = None
    k: int | None = None


class QuestionsBody(BaseModel):
    query: str


class ExecuteBody(BaseModel):
    query: str
    questions: list[str]
    hits: list[str]
    budget: int | None = None


class QaBody(BaseModel):
    question: str
    keyframe_id: str | None = None
    video_id: str | None = None
    max_frames: int | None = None


def hit_dict(engine: Engine, hit: ScoredHit) -> dict:
    return engine.hit_payload(hit)


def group_dict(engine: Engine, group: VideoGroup) -> dict:
    return {
        "video_id": group.video_id,
        "best": group.best,
        "hits": [hit_dict(engine, h) for h in group.hits],
    }


def rerank_dict(engine: Engine, result: RerankResult) -> dict:
    hits = []
    for rh in result.hits:
        payload = hit_dict(engine, rh.hit)
        payload.update(
            {
                "yes_count": rh.yes_count,
                "unknown_count": rh.unknown_count,
                "evaluated": rh.evaluated,
                "answers": [{"value": a.value.value, "raw": a.raw} for a in rh.answers],
            }
        )
        hits.append(payload)
    return {"hits": hits, "degraded": result.degraded}


def qa_dict(answer: QaAnswer) -> dict:
    return {
        "text": answer.text,
        "category": answer.category.value,
        "per_frame": [{"keyframe_id": kf_id, "answer": raw} for kf_id, raw in answer.per_frame],
        "latency_ms": answer.latency_ms,
        "low_agreement": answer.low_agreement,
    }


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="fusionkit", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error_response(400, "invalid_body", str(exc.errors()[:1]))

    @app.exception_handler(FusionkitError)
    async def engine_error_handler(request: Request, exc: FusionkitError):
        for klass, status, code in _ERROR_STATUS:
            if isinstance(exc, klass):
                extra = {}
                if isinstance(exc, DeadlineExceeded):
                    extra["per_frame"] = [
                        {"keyframe_id": kf_id, "answer": raw} for kf_id, raw in exc.per_frame
                    ]
                return _error_response(status, code, str(exc), **extra)
        return _error_response(500, "internal", str(exc))

    @app.post("/search")
    def search(body: SearchBody):
        hits = engine.search(body.text, k=body.k, alpha=body.alpha)
        if body.group:
            groups = engine.group(hits)
            return {"groups": [group_dict(engine, g) for g in groups]}
        return {"hits": [hit_dict(engine, h) for h in hits]}

    @app.post("/search/text")
    def search_text(body: TextSearchBody):
        if not engine.text_ready:
            raise EmptySpace("text index not built")
        hits = engine.search_text(body.query, source=body.source, k=body.k or 10)
        out = []
        for hit in hits:
            seg = engine.text_index.segment(hit.segment_id)
            out.append(
                {
                    "segment_id": seg.segment_id,
                    "video_id": seg.video_id,
                    "source": seg.source.value,
                    "text": seg.text,
                    "t_start_ms": seg.t_start_ms,
                    "t_end_ms": seg.t_end_ms,
                    "score": hit.score,
                    "matched_terms": hit.matched_terms,
                }
            )
        return {"hits": out}

    @app.post("/rerank/questions")
    def rerank_questions(body: QuestionsBody):
        try:
            questions = engine.rerank_questions(body.query)
        except ValueError as exc:
            return _error_response(400, "invalid_body", str(exc))
        return {"questions": [q.text for q in questions]}

    @app.post("/rerank/execute")
    def rerank_execute(body: ExecuteBody):
        try:
            result = engine.rerank_execute(body.query, body.questions, body.hits, budget=body.budget)
        except ValueError as exc:
            return _error_response(400, "invalid_body", str(exc))
        return rerank_dict(engine, result)

    @app.post("/qa")
    def qa(body: QaBody):
        try:
            request = QaRequest(
                question=body.question,
                keyframe_id=body.keyframe_id,
                video_id=body.video_id,
                max_frames=body.max_frames if body.max_frames is not None else engine.config.qa_max_frames,
            )
        except ValueError as exc:
            return _error_response(400, "invalid_body", str(exc))
        return qa_dict(engine.answer(request))

    @app.get("/videos/{video_id}/keyframes")
    def video_keyframes(video_id: str):
        if video_id not in engine.catalog.videos:
            return _error_response(404, "unknown_target", f"unknown video {video_id!r}")
        keyframes = engine.catalog.keyframes_for(video_id)
        return {
            "video_id": video_id,
            "keyframes": [
                {
                    "keyframe_id": kf.keyframe_id,
                    "frame_index": kf.frame_index,
                    "timestamp_ms": kf.timestamp_ms,
                    "image_uri": kf.image_uri,
                }
                for kf in keyframes
            ],
        }

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "index_ready": engine.index_ready,
            "text_ready": engine.text_ready,
            "providers": engine.provider_health(),
        }

    @app.get("/config")
    def config():
        return {"config": engine.config.public_dict()}

    static_dir = engine.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
