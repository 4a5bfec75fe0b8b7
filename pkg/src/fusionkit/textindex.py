"""Lexical search over OCR and ASR text segments.

A tokenized inverted index with BM25 ranking (k1=1.2, b=0.75, non-negative
IDF). No stemming or stop words: the corpora are multilingual and
language-specific normalization is unsafe by default. OCR segments carry
point timestamps (t_start == t_end at the keyframe); ASR segments carry
spans from the transcriber.
"""

from __future__ import annotations

import json
import math
import re
import threading
from array import array
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateSegment,
    EmptyAfterTokenize,
    EmptyQuery,
    InvalidQuery,
    MalformedLine,
)

BM25_K1 = 1.2
BM25_B = 0.75

# Unicode letters and digits, underscore excluded.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Case-folded Unicode word segmentation; empty input yields []."""
    return _TOKEN_RE.findall(text.casefold())


class Source(str, Enum):
    OCR = "ocr"
    ASR = "asr"


@dataclass(frozen=True)
class TextSegment:
    segment_id: str
    video_id: str
    source: Source
    text: str
    t_start_ms: int
    t_end_ms: int

    def __post_init__(self):
        if not self.segment_id:
            raise ValueError("segment_id must be nonempty")
        if not self.text.strip():
            raise ValueError(f"segment {self.segment_id}: text empty after trim")
        if self.t_start_ms < 0 or self.t_end_ms < self.t_start_ms:
            raise ValueError(f"segment {self.segment_id}: bad time span [{self.t_start_ms}, {self.t_end_ms}]")


@dataclass(frozen=True)
class TextHit:
    segment_id: str
    score: float
    matched_terms: list[str]


def load_segments_jsonl(path) -> list[TextSegment]:
    """Read one JSON TextSegment per line; blank lines are skipped."""
    segments = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            segments.append(
                TextSegment(
                    segment_id=obj["segment_id"],
                    video_id=obj["video_id"],
                    source=Source(obj["source"].lower()),
                    text=obj["text"],
                    t_start_ms=int(obj["t_start_ms"]),
                    t_end_ms=int(obj["t_end_ms"]),
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise MalformedLine(line_no, f"bad segment record: {exc}") from None
    return segments


class InvertedIndex:
    """Term postings with per-segment lengths and corpus stats.

    Indexing is single-writer; searches take a cheap snapshot of the touched
    postings under the lock and score outside it, so a search never observes
    a half-indexed segment.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._segments: list[TextSegment] = []
        self._seg_row: dict[str, int] = {}
        self._lengths = array("i")
        self._total_len = 0
        # term -> (row numbers, term frequencies), both append-only arrays
        self._postings: dict[str, tuple[array, array]] = {}

    @property
    def segment_count(self) -> int:
        return len(self._segments)

    def segment(self, segment_id: str) -> TextSegment:
        return self._segments[self._seg_row[segment_id]]

    def has_segment(self, segment_id: str) -> bool:
        return segment_id in self._seg_row

    def postings(self, term: str) -> list[tuple[str, int]]:
        """(segment_id, term_frequency) pairs sorted by segment_id."""
        with self._lock:
            entry = self._postings.get(term)
            if entry is None:
                return []
            pairs = [(self._segments[row].segment_id, tf) for row, tf in zip(entry[0], entry[1])]
        return sorted(pairs)

    def index_segment(self, seg: TextSegment) -> int:
        """Add one segment atomically; returns its distinct-term count."""
        tokens = tokenize(seg.text)
        if not tokens:
            raise EmptyAfterTokenize(f"segment {seg.segment_id!r} has no tokens")
        counts = Counter(tokens)
        with self._lock:
            if seg.segment_id in self._seg_row:
                raise DuplicateSegment(seg.segment_id)
            row = len(self._segments)
            self._segments.append(seg)
            self._seg_row[seg.segment_id] = row
            self._lengths.append(len(tokens))
            self._total_len += len(tokens)
            for term, tf in counts.items():
                entry = self._postings.get(term)
                if entry is None:
                    entry = (array("i"), array("i"))
                    self._postings[term] = entry
                entry[0].append(row)
                entry[1].append(tf)
        return len(counts)

    def search_text(self, query: str, source_filter: Source | None = None, k: int = 10) -> list[TextHit]:
        """BM25-ranked hits, descending, ties broken by segment_id ascending.

        Duplicate query terms count once. Only segments matching at least one
        term are returned; source_filter restricts to OCR or ASR segments.
        """
        if k < 1:
            raise InvalidQuery(f"k must be >= 1, got {k}")
        terms = list(dict.fromkeys(tokenize(query)))
        if not terms:
            raise EmptyQuery(f"no tokens survive in query {query!r}")

        with self._lock:
            n = len(self._segments)
            total_len = self._total_len
            snapshot = []
            for term in terms:
                entry = self._postings.get(term)
                if entry is None:
                    continue
                rows = np.frombuffer(entry[0], dtype=np.int32, count=len(entry[0])).copy()
                tfs = np.frombuffer(entry[1], dtype=np.int32, count=len(entry[1])).copy()
                snapshot.append((term, rows, tfs))
            lengths = np.frombuffer(self._lengths, dtype=np.int32, count=n).astype(np.float64)
            segments = self._segments[:n]

        if n == 0 or not snapshot:
            return []
        avgdl = total_len / n
        scores = np.zeros(n, dtype=np.float64)
        for _term, rows, tfs in snapshot:
            df = len(rows)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            tf = tfs.astype(np.float64)
            denom = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * lengths[rows] / avgdl)
            scores[rows] += idf * tf * (BM25_K1 + 1.0) / denom

        cand = np.flatnonzero(scores > 0.0)
        if source_filter is not None:
            cand = cand[[segments[r].source == source_filter for r in cand]]
        if cand.size == 0:
            return []
        if cand.size > k:
            top = cand[np.argpartition(-scores[cand], k - 1)[:k]]
            kth = scores[top].min()
            cand = cand[scores[cand] >= kth]
        order = sorted(cand.tolist(), key=lambda r: (-scores[r], segments[r].segment_id))[:k]

        def contains(rows: np.ndarray, row: int) -> bool:
            i = int(np.searchsorted(rows, row))
            return i < rows.size and int(rows[i]) == row

        hits = []
        for r in order:
            matched = [t for t, rows, _tfs in snapshot if contains(rows, r)]
            hits.append(TextHit(segments[r].segment_id, float(scores[r]), matched))
        return hits
