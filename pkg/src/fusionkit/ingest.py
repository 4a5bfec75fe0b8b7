"""Video cataloging, keyframe extraction, and the timestamp-frame mapping.

Keyframe extraction is delegated to an external decoder behind a small
adapter contract (command template or HTTP endpoint). The adapter emits one
line per keyframe on stdout: ``frame_index<TAB>timestamp_ms<TAB>image_uri``.
The resulting mapping is persisted as a versioned, line-oriented UTF-8 file
so that repeated extraction of the same video is byte-for-byte reproducible.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Protocol

import httpx

from .errors import (
    AdapterFailure,
    AdapterTimeout,
    CorruptMap,
    DuplicateVideoId,
    EmptyOutput,
    MalformedLine,
    UnknownKeyframe,
    VersionMismatch,
)

MAP_FORMAT_NAME = "fusionista-map"
MAP_FORMAT_VERSION = "v1"


def _check_id(name: str, value: str) -> None:
    if not value or any(c.isspace() for c in value):
        raise ValueError(f"{name} must be nonempty with no whitespace: {value!r}")


def _check_uri(value: str) -> None:
    # Tabs/newlines would break the line-oriented map format.
    if any(c in value for c in "\t\n\r"):
        raise ValueError(f"image_uri must not contain tab or newline: {value!r}")


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    source_uri: str
    duration_ms: int
    fps: float

    def __post_init__(self):
        _check_id("video_id", self.video_id)
        if not isinstance(self.duration_ms, int) or self.duration_ms < 0:
            raise ValueError(f"duration_ms must be an integer >= 0: {self.duration_ms!r}")
        if not (self.fps > 0 and self.fps == self.fps and self.fps != float("inf")):
            raise ValueError(f"fps must be finite and > 0: {self.fps!r}")


@dataclass(frozen=True)
class Keyframe:
    keyframe_id: str
    video_id: str
    frame_index: int
    timestamp_ms: int
    image_uri: str


class MapEntry(NamedTuple):
    frame_index: int
    timestamp_ms: int
    image_uri: str


@dataclass(frozen=True)
class TimestampMap:
    """Ordered (frame_index, timestamp_ms, image_uri) entries for one video.

    Entries are strictly increasing in both frame_index and timestamp_ms;
    serialization round-trips bit-exactly.
    """

    video_id: str
    entries: tuple[MapEntry, ...]

    def __post_init__(self):
        _check_id("video_id", self.video_id)
        prev: MapEntry | None = None
        for e in self.entries:
            if e.frame_index < 0 or e.timestamp_ms < 0:
                raise ValueError(f"negative frame_index or timestamp_ms: {e}")
            _check_uri(e.image_uri)
            if prev is not None:
                if e.frame_index <= prev.frame_index:
                    raise ValueError(f"frame_index not strictly increasing at {e.frame_index}")
                if e.timestamp_ms <= prev.timestamp_ms:
                    raise ValueError(f"timestamp_ms not strictly increasing at {e.frame_index}")
            prev = e


def keyframe_id_for(video_id: str, frame_index: int) -> str:
    """Stable keyframe id; zero-padding keeps lexicographic == frame order."""
    return f"{video_id}:{frame_index:08d}"


def keyframes_from_map(tsmap: TimestampMap) -> list[Keyframe]:
    return [
        Keyframe(keyframe_id_for(tsmap.video_id, e.frame_index), tsmap.video_id, e.frame_index, e.timestamp_ms, e.image_uri)
        for e in tsmap.entries
    ]


# --- manifest ---------------------------------------------------------------


def parse_manifest(manifest_text: str) -> list[VideoRecord]:
    """Parse a TSV manifest: video_id, source_uri, duration_ms, fps.

    Blank lines and full-line ``#`` comments are skipped; order is preserved.
    Raises MalformedLine on bad field count/types and DuplicateVideoId on a
    repeated video_id.
    """
    records: list[VideoRecord] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(manifest_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = raw.rstrip("\n").split("\t")
        if len(fields) != 4:
            raise MalformedLine(line_no, f"expected 4 tab-separated fields, got {len(fields)}")
        video_id, source_uri, duration_s, fps_s = fields
        try:
            duration_ms = int(duration_s)
            fps = float(fps_s)
        except ValueError as exc:
            raise MalformedLine(line_no, f"bad numeric field: {exc}") from None
        if video_id in seen:
            raise DuplicateVideoId(video_id)
        try:
            rec = VideoRecord(video_id, source_uri, duration_ms, fps)
        except ValueError as exc:
            raise MalformedLine(line_no, str(exc)) from None
        seen.add(video_id)
        records.append(rec)
    return records


# --- extractor adapters -----------------------------------------------------


class ExtractorAdapter(Protocol):
    """External decoder contract: produce keyframe lines for a video."""

    def run(self, video: VideoRecord) -> str:
        """Return raw stdout text (the line protocol) or raise an adapter error."""
        ...


@dataclass
class CommandAdapter:
    """Runs an external command; ``{source_uri}`` / ``{video_id}`` are substituted.

    Without placeholders the source_uri is appended as the final argument.
    """

    command_template: str
    timeout_ms: int = 60_000

    def run(self, video: VideoRecord) -> str:
        argv = shlex.split(self.command_template)
        if any("{source_uri}" in a or "{video_id}" in a for a in argv):
            argv = [a.format(source_uri=video.source_uri, video_id=video.video_id) for a in argv]
        else:
            argv = argv + [video.source_uri]
        try:
            proc = subprocess.run(
                argv,
                capture_output=True,
                text=True,
                timeout=self.timeout_ms / 1000.0,
            )
        except subprocess.TimeoutExpired:
            raise AdapterTimeout(f"adapter exceeded {self.timeout_ms} ms for {video.video_id}") from None
        except OSError as exc:
            raise AdapterFailure(f"adapter could not start: {exc}") from None
        if proc.returncode != 0:
            raise AdapterFailure(f"adapter exited {proc.returncode}: {proc.stderr.strip()[:500]}")
        return proc.stdout


@dataclass
class HttpAdapter:
    """POSTs the video record to an extraction endpoint; body is the line protocol."""

    url: str
    timeout_ms: int = 60_000

    def run(self, video: VideoRecord) -> str:
        payload = {
            "video_id": video.video_id,
            "source_uri": video.source_uri,
            "duration_ms": video.duration_ms,
            "fps": video.fps,
        }
        try:
            resp = httpx.post(self.url, json=payload, timeout=self.timeout_ms / 1000.0)
        except httpx.TimeoutException:
            raise AdapterTimeout(f"adapter endpoint exceeded {self.timeout_ms} ms") from None
        except httpx.HTTPError as exc:
            raise AdapterFailure(f"adapter endpoint unreachable: {exc}") from None
        if resp.status_code != 200:
            raise AdapterFailure(f"adapter endpoint returned {resp.status_code}")
        return resp.text


@dataclass
class CallableAdapter:
    """Wraps an in-process function; used by tests and synthetic pipelines."""

    fn: Callable[[VideoRecord], str]

    def run(self, video: VideoRecord) -> str:
        return self.fn(video)


def make_adapter(spec: str, timeout_ms: int = 60_000) -> ExtractorAdapter:
    if spec.startswith(("http://", "https://")):
        return HttpAdapter(spec, timeout_ms)
    return CommandAdapter(spec, timeout_ms)


def _parse_adapter_output(video: VideoRecord, text: str) -> list[MapEntry]:
    entries: list[MapEntry] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 3:
            raise AdapterFailure(f"output line {line_no}: expected 3 fields, got {len(fields)}")
        try:
            frame_index = int(fields[0])
            timestamp_ms = int(fields[1])
        except ValueError:
            raise AdapterFailure(f"output line {line_no}: bad numeric field") from None
        entries.append(MapEntry(frame_index, timestamp_ms, fields[2]))
    return entries


def extract_keyframes(video: VideoRecord, adapter: ExtractorAdapter) -> tuple[list[Keyframe], TimestampMap]:
    """Run the adapter and validate its output into sorted keyframes plus a map.

    Output is sorted by frame_index regardless of emission order. Raises
    EmptyOutput when a video with duration_ms > 0 yields no frames, and
    AdapterFailure when the output violates the mapping invariants.
    """
    text = adapter.run(video)
    entries = sorted(_parse_adapter_output(video, text), key=lambda e: e.frame_index)
    if not entries:
        if video.duration_ms > 0:
            raise EmptyOutput(video.video_id)
        return [], TimestampMap(video.video_id, ())
    for e in entries:
        if e.timestamp_ms > video.duration_ms:
            raise AdapterFailure(
                f"frame {e.frame_index}: timestamp {e.timestamp_ms} ms beyond video duration {video.duration_ms} ms"
            )
    try:
        tsmap = TimestampMap(video.video_id, tuple(entries))
    except ValueError as exc:
        raise AdapterFailure(f"adapter output violates mapping invariants: {exc}") from None
    return keyframes_from_map(tsmap), tsmap


# --- timestamp map serialization ---------------------------------------------


def serialize_timestamp_map(tsmap: TimestampMap) -> bytes:
    lines = [f"{MAP_FORMAT_NAME} {MAP_FORMAT_VERSION} {tsmap.video_id}"]
    lines.extend(f"{e.frame_index}\t{e.timestamp_ms}\t{e.image_uri}" for e in tsmap.entries)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_timestamp_map(data: bytes) -> TimestampMap:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptMap(0, f"not valid UTF-8: {exc}") from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptMap(1, "empty file")
    header = lines[0].split(" ", 2)
    if len(header) != 3 or header[0] != MAP_FORMAT_NAME:
        raise CorruptMap(1, f"bad header {lines[0]!r}")
    if header[1] != MAP_FORMAT_VERSION:
        raise VersionMismatch(header[1])
    video_id = header[2]
    entries: list[MapEntry] = []
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorruptMap(line_no, f"expected 3 fields, got {len(fields)}")
        try:
            entries.append(MapEntry(int(fields[0]), int(fields[1]), fields[2]))
        except ValueError:
            raise CorruptMap(line_no, "bad numeric field") from None
    try:
        return TimestampMap(video_id, tuple(entries))
    except ValueError as exc:
        raise CorruptMap(1, f"invariant violation: {exc}") from None


def write_timestamp_map(tsmap: TimestampMap, sink) -> int:
    """Write the map to a path or binary file object; returns bytes written."""
    data = serialize_timestamp_map(tsmap)
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        Path(sink).write_bytes(data)
    return len(data)


def read_timestamp_map(source) -> TimestampMap:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    return parse_timestamp_map(data)


# --- catalog ------------------------------------------------------------------


class Catalog:
    """Videos plus their timestamp maps and derived keyframe lookup.

    Mutations go through a single lock so concurrent extraction workers
    commit one at a time; reads are plain dict lookups.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.videos: dict[str, VideoRecord] = {}
        self.maps: dict[str, TimestampMap] = {}
        self._keyframes: dict[str, Keyframe] = {}
        self._by_video: dict[str, list[Keyframe]] = {}

    def add_video(self, video: VideoRecord) -> None:
        with self._lock:
            if video.video_id in self.videos:
                raise DuplicateVideoId(video.video_id)
            self.videos[video.video_id] = video

    def commit_map(self, tsmap: TimestampMap) -> None:
        kfs = keyframes_from_map(tsmap)
        with self._lock:
            self.maps[tsmap.video_id] = tsmap
            self._by_video[tsmap.video_id] = kfs
            for kf in kfs:
                self._keyframes[kf.keyframe_id] = kf

    def video(self, video_id: str) -> VideoRecord:
        return self.videos[video_id]

    def keyframe(self, keyframe_id: str) -> Keyframe:
        try:
            return self._keyframes[keyframe_id]
        except KeyError:
            raise UnknownKeyframe(keyframe_id) from None

    def has_keyframe(self, keyframe_id: str) -> bool:
        return keyframe_id in self._keyframes

    def keyframes_for(self, video_id: str) -> list[Keyframe]:
        return list(self._by_video.get(video_id, []))

    def all_keyframes(self) -> Iterable[Keyframe]:
        for video_id in sorted(self._by_video):
            yield from self._by_video[video_id]

    # persistence: <dir>/catalog.tsv plus <dir>/maps/<video_id>.map

    def save(self, directory) -> None:
        root = Path(directory)
        maps_dir = root / "maps"
        maps_dir.mkdir(parents=True, exist_ok=True)
        lines = [
            f"{v.video_id}\t{v.source_uri}\t{v.duration_ms}\t{v.fps:g}"
            for v in sorted(self.videos.values(), key=lambda v: v.video_id)
        ]
        (root / "catalog.tsv").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        for video_id in sorted(self.maps):
            write_timestamp_map(self.maps[video_id], maps_dir / f"{video_id}.map")

    @classmethod
    def load(cls, directory) -> "Catalog":
        root = Path(directory)
        catalog = cls()
        manifest = root / "catalog.tsv"
        if manifest.exists():
            for rec in parse_manifest(manifest.read_text(encoding="utf-8")):
                catalog.add_video(rec)
        maps_dir = root / "maps"
        if maps_dir.is_dir():
            for path in sorted(maps_dir.glob("*.map")):
                catalog.commit_map(read_timestamp_map(path))
        return catalog


@dataclass
class IngestReport:
    videos: int = 0
    keyframes: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    def summary(self) -> str:
        return f"videos={self.videos} keyframes={self.keyframes} failures={len(self.failures)}"


def ingest_corpus(
    records: list[VideoRecord],
    adapter: ExtractorAdapter,
    catalog: Catalog | None = None,
    workers: int = 4,
) -> tuple[Catalog, IngestReport]:
    """Extract keyframes for every record, concurrently across videos.

    Duration-0 videos are cataloged but skipped with a warning record;
    per-video adapter errors are collected rather than aborting the batch.
    """
    catalog = catalog or Catalog()
    report = IngestReport()
    for rec in records:
        catalog.add_video(rec)
        report.videos += 1

    to_extract = [r for r in records if r.duration_ms > 0]
    report.skipped = [r.video_id for r in records if r.duration_ms == 0]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {pool.submit(extract_keyframes, rec, adapter): rec for rec in to_extract}
        for fut, rec in futures.items():
            try:
                kfs, tsmap = fut.result()
            except (AdapterFailure, AdapterTimeout, EmptyOutput) as exc:
                report.failures.append((rec.video_id, str(exc)))
                continue
            catalog.commit_map(tsmap)
            report.keyframes += len(kfs)
    return catalog, report
