"""Yes-count reranking driven by generated clarification questions.

Three yes/no questions are generated from the user query (question
provider), returned to the caller for confirmation or editing, then asked
of a VQA provider per candidate image. Evaluated hits are reordered by
number of yes answers; "unknown" answers count as no but are tracked so the
UI can surface model uncertainty. Reranking never touches the underlying
scores: it is annotation plus reordering only.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

import httpx

from .errors import BadQuestionCount, ProviderUnavailable
from .search import ScoredHit

QUESTION_COUNT = 3

# Lead tokens accepted as yes/no question openers (English mock lexicon).
YES_NO_LEAD_TOKENS = frozenset(
    "is are was were am do does did can could will would shall should has have had may might must".split()
)

_FIRST_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class ClarificationQuestion:
    text: str
    index: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("question text must be nonempty")
        if not self.text.rstrip().endswith("?"):
            raise ValueError(f"question must end with '?': {self.text!r}")
        if not 0 <= self.index < QUESTION_COUNT:
            raise ValueError(f"question index out of range: {self.index}")


class AnswerValue(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class VqaAnswer:
    value: AnswerValue
    raw: str


@dataclass(frozen=True)
class RerankedHit:
    hit: ScoredHit
    yes_count: int
    unknown_count: int
    answers: tuple[VqaAnswer, ...]
    evaluated: bool


@dataclass(frozen=True)
class RerankResult:
    hits: list[RerankedHit]
    degraded: bool = False


def is_yes_no_question(text: str) -> bool:
    m = _FIRST_TOKEN_RE.search(text.casefold())
    return m is not None and m.group(0) in YES_NO_LEAD_TOKENS and text.rstrip().endswith("?")


def normalize_answer(raw: str) -> VqaAnswer:
    """Map free-text VQA output by its leading token: yes / no / anything else."""
    m = _FIRST_TOKEN_RE.search(raw.casefold())
    token = m.group(0) if m else ""
    if token == "yes":
        return VqaAnswer(AnswerValue.YES, raw)
    if token == "no":
        return VqaAnswer(AnswerValue.NO, raw)
    return VqaAnswer(AnswerValue.UNKNOWN, raw)


# --- providers ---------------------------------------------------------------


class QuestionProvider(Protocol):
    def generate(self, query: str) -> list[str]: ...


class VqaProvider(Protocol):
    def answer(self, image_ref: str, question: str) -> str: ...


class MockQuestionProvider:
    """Template questions about presence, framing, and detail of the query."""

    def generate(self, query: str) -> list[str]:
        subject = query.strip()
        return [
            f"Is there {subject} in the scene?",
            f"Does the image clearly show {subject}?",
            f"Are the details of {subject} visible in the frame?",
        ]


class HttpQuestionProvider:
    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def generate(self, query: str) -> list[str]:
        try:
            resp = httpx.post(f"{self.base_url}/qgen", json={"query": query}, timeout=self.timeout_s)
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"qgen provider unreachable: {exc}") from None
        if resp.status_code != 200:
            raise ProviderUnavailable(f"qgen provider returned {resp.status_code}")
        try:
            return list(resp.json()["questions"])
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"qgen provider returned bad body: {exc}") from None


class MockVqaProvider:
    """Deterministic answers: explicit mapping first, then a keyed-hash fallback."""

    def __init__(
        self,
        answers: dict[tuple[str, str], str] | None = None,
        constant: str | None = None,
    ):
        self.answers = dict(answers or {})
        self.constant = constant

    def answer(self, image_ref: str, question: str) -> str:
        if self.constant is not None:
            return self.constant
        explicit = self.answers.get((image_ref, question))
        if explicit is not None:
            return explicit
        digest = hashlib.blake2b(
            f"{image_ref}\x00{question}".encode("utf-8"), key=b"fusionkit-mock-vqa", digest_size=1
        ).digest()[0]
        if digest < 112:
            return "yes"
        if digest < 224:
            return "no"
        return "maybe"


class HttpVqaProvider:
    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def answer(self, image_ref: str, question: str) -> str:
        try:
            resp = httpx.post(
                f"{self.base_url}/vqa",
                json={"image_ref": image_ref, "question": question},
                timeout=self.timeout_s,
            )
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"vqa provider unreachable: {exc}") from None
        if resp.status_code != 200:
            raise ProviderUnavailable(f"vqa provider returned {resp.status_code}")
        try:
            return str(resp.json()["answer"])
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"vqa provider returned bad body: {exc}") from None


# --- operations ----------------------------------------------------------------


def generate_questions(query: str, qgen_provider: QuestionProvider) -> list[ClarificationQuestion]:
    """Ask the provider for exactly three questions, retrying a bad count once.

    Question texts are trimmed and get a terminal '?' appended when missing;
    the caller shows them to the user for confirmation or editing before any
    VQA cost is paid.
    """
    if not query.strip():
        raise ValueError("query must be nonempty")
    got = 0
    for _attempt in range(2):
        raw = qgen_provider.generate(query)
        texts = [t.strip() for t in raw if t and t.strip()]
        if len(texts) == QUESTION_COUNT:
            return [
                ClarificationQuestion(t if t.endswith("?") else t + "?", i)
                for i, t in enumerate(texts)
            ]
        got = len(texts)
    raise BadQuestionCount(got)


def rerank(
    hits: list[ScoredHit],
    questions: list[ClarificationQuestion],
    vqa_provider: VqaProvider,
    budget: int,
    image_ref_for: Callable[[str], str] | None = None,
    concurrency: int = 4,
    cache: dict[tuple[str, str], VqaAnswer] | None = None,
) -> RerankResult:
    """Reorder the top-`budget` hits by yes-count over the three questions.

    Evaluated hits are sorted by (yes_count desc, fused desc, keyframe_id asc);
    the unevaluated tail keeps its original order. The output is always a
    permutation of the input. If any VQA call fails, partial answers are
    discarded and the original order is returned with degraded=True.
    """
    if len(questions) != QUESTION_COUNT:
        raise BadQuestionCount(len(questions))
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    resolve = image_ref_for or (lambda keyframe_id: keyframe_id)
    head, tail = hits[:budget], hits[budget:]

    cache = cache if cache is not None else {}
    pending: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for hit in head:
        ref = resolve(hit.keyframe_id)
        for q in questions:
            key = (ref, q.text)
            if key not in cache and key not in seen:
                seen.add(key)
                pending.append(key)

    try:
        if pending:
            with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
                raws = list(pool.map(lambda key: vqa_provider.answer(*key), pending))
            for key, raw in zip(pending, raws):
                cache[key] = normalize_answer(raw)
    except ProviderUnavailable:
        original = [RerankedHit(h, 0, 0, (), evaluated=False) for h in hits]
        return RerankResult(original, degraded=True)

    evaluated = []
    for hit in head:
        ref = resolve(hit.keyframe_id)
        answers = tuple(cache[(ref, q.text)] for q in questions)
        yes = sum(1 for a in answers if a.value is AnswerValue.YES)
        unknown = sum(1 for a in answers if a.value is AnswerValue.UNKNOWN)
        evaluated.append(RerankedHit(hit, yes, unknown, answers, evaluated=True))
    evaluated.sort(key=lambda r: (-r.yes_count, -r.hit.fused, r.hit.keyframe_id))

    out = evaluated + [RerankedHit(h, 0, 0, (), evaluated=False) for h in tail]
    return RerankResult(out, degraded=False)
