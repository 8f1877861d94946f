"""Durable per-session event logs with windowed queries and replay.

One newline-delimited JSON file per session (``events-<session>.jsonl``):
each line is independently parseable, so truncating a torn tail loses at
most one event. A sidecar manifest (``session-<session>.json``) carries the
session's configuration and open/closed state so state can be rebuilt after
a restart. An in-memory segment index, rebuilt on startup, serves windowed
queries.
"""

from __future__ import annotations

import bisect
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .core import AnalyticsConfig, SegmenterConfig, SpeakingSegment, Timestamp

SAMPLE_BATCH = "SAMPLE_BATCH"
PARTICIPANT_EVENT = "PARTICIPANT_EVENT"
SEGMENT = "SEGMENT"
STATS = "STATS"
FRAME = "FRAME"

KINDS = {SAMPLE_BATCH, PARTICIPANT_EVENT, SEGMENT, STATS, FRAME}


class UnknownSession(KeyError):
    pass


class SessionClosed(Exception):
    pass


def _wall_ms() -> int:
    return int(time.time() * 1000)


@dataclass
class _SessionLog:
    path: Path
    manifest_path: Path
    manifest: dict
    lock: threading.Lock = field(default_factory=threading.Lock)
    fh: object | None = None
    seq: int = 0
    last_t: Timestamp = 0
    segments: list[SpeakingSegment] = field(default_factory=list)


class EventStore:
    """Append-only JSONL event store, one log per session.

    Appends are flushed before returning. Single writer per session is the
    caller's contract; readers get a consistent prefix.
    """

    def __init__(self, data_dir: str | Path, clock: Callable[[], int] = _wall_ms):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self._logs: dict[str, _SessionLog] = {}
        self._lock = threading.Lock()
        self._load_existing()

    # -- lifecycle ----------------------------------------------------------

    def create_session(
        self,
        session: str,
        seg_cfg: SegmenterConfig,
        ana_cfg: AnalyticsConfig,
        created_t: Timestamp,
    ) -> None:
        manifest = {
            "session": session,
            "created_t": created_t,
            "segmenter": seg_cfg.to_dict(),
            "analytics": ana_cfg.to_dict(),
            "closed": False,
        }
        log = _SessionLog(
            path=self.data_dir / f"events-{session}.jsonl",
            manifest_path=self.data_dir / f"session-{session}.json",
            manifest=manifest,
        )
        with self._lock:
            if session in self._logs:
                raise ValueError(f"session {session} already exists")
            self._logs[session] = log
        log.manifest_path.write_text(json.dumps(manifest, sort_keys=True))
        log.fh = open(log.path, "a", encoding="utf-8")

    def close_session(self, session: str) -> None:
        log = self._get(session)
        with log.lock:
            if log.manifest["closed"]:
                raise SessionClosed(session)
            log.manifest["closed"] = True
            log.manifest_path.write_text(json.dumps(log.manifest, sort_keys=True))
            if log.fh is not None:
                log.fh.close()
                log.fh = None

    def session_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._logs)

    def manifest(self, session: str) -> dict:
        return dict(self._get(session).manifest)

    # -- writes -------------------------------------------------------------

    def append(self, session: str, kind: str, payload: dict, t: Timestamp | None = None) -> int:
        """Append one event; durable (flushed) before the seq is returned."""
        if kind not in KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        log = self._get(session)
        with log.lock:
            if log.manifest["closed"] or log.fh is None:
                raise SessionClosed(session)
            log.seq += 1
            # Receive-time stamp; clamped so t never regresses within a log.
            log.last_t = max(log.last_t, self.clock() if t is None else t)
            record = {"seq": log.seq, "t": log.last_t, "kind": kind, "payload": payload}
            log.fh.write(json.dumps(record, separators=(",", ":")) + "\n")
            log.fh.flush()
            if kind == SEGMENT:
                self._index_segment(log, payload)
            return log.seq

    # -- reads --------------------------------------------------------------

    def query_segments(self, session: str, from_t: Timestamp, to_t: Timestamp) -> list[SpeakingSegment]:
        """All stored segments intersecting [from_t, to_t], sorted by start."""
        if not from_t < to_t:
            raise ValueError("from must precede to")
        log = self._get(session)
        with log.lock:
            return [s for s in log.segments if s.start <= to_t and s.end >= from_t]

    def replay(self, session: str, sink: Callable[[dict], None]) -> tuple[int, str | None]:
        """Deliver the session's events to ``sink`` in seq order.

        Stops at the first corrupt or out-of-sequence line; returns the count
        of delivered events and a description of the corruption, if any.
        """
        log = self._get(session)
        count, _, error = self._scan(log.path, sink)
        return count, error

    # -- internals ----------------------------------------------------------

    def _get(self, session: str) -> _SessionLog:
        with self._lock:
            try:
                return self._logs[session]
            except KeyError:
                raise UnknownSession(session) from None

    @staticmethod
    def _index_segment(log: _SessionLog, payload: dict) -> None:
        seg = SpeakingSegment.from_dict(payload)
        bisect.insort(log.segments, seg, key=lambda s: (s.start, s.end, s.participant))

    @staticmethod
    def _scan(path: Path, sink: Callable[[dict], None] | None) -> tuple[int, int, str | None]:
        """Walk a log file; returns (events delivered, valid byte length, error)."""
        count = 0
        valid_bytes = 0
        if not path.exists():
            return 0, 0, None
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.endswith(b"\n"):
                    return count, valid_bytes, f"line {lineno}: torn write (no newline)"
                line = raw.strip()
                if not line:
                    valid_bytes += len(raw)
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError as exc:
                    return count, valid_bytes, f"line {lineno}: {exc.msg}"
                if not isinstance(event, dict) or event.get("seq") != count + 1:
                    return count, valid_bytes, f"line {lineno}: sequence break"
                if sink is not None:
                    sink(event)
                count += 1
                valid_bytes += len(raw)
        return count, valid_bytes, None

    def _load_existing(self) -> None:
        for manifest_path in sorted(self.data_dir.glob("session-*.json")):
            manifest = json.loads(manifest_path.read_text())
            session = manifest["session"]
            log = _SessionLog(
                path=self.data_dir / f"events-{session}.jsonl",
                manifest_path=manifest_path,
                manifest=manifest,
            )
            segments: list[SpeakingSegment] = []

            def index(event: dict, segments=segments) -> None:
                if event["kind"] == SEGMENT:
                    segments.append(SpeakingSegment.from_dict(event["payload"]))
                log.last_t = max(log.last_t, int(event["t"]))

            count, valid_bytes, error = self._scan(log.path, index)
            log.seq = count
            log.segments = sorted(segments, key=lambda s: (s.start, s.end, s.participant))
            if not manifest["closed"]:
                if error is not None:
                    # Drop the torn tail so future appends start on a clean line.
                    with open(log.path, "ab") as fh:
                        fh.truncate(valid_bytes)
                log.fh = open(log.path, "a", encoding="utf-8")
            self._logs[session] = log
