"""Session runtime: wires segmentation, analytics, feedback frames,
persistence, and stream fan-out together.

Each session has a single logical owner: every mutation runs under that
session's lock, while distinct sessions proceed fully in parallel. Analytics
windows are anchored on the session's observed data watermark (the largest
sample/event timestamp seen), so recomputing from a replayed log gives
identical results regardless of wall-clock time.
"""

from __future__ import annotations

import logging
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol

from . import store as store_mod
from .analytics import IntervalStats, compute_interval_stats, derive_turns
from .core import (
    JOIN,
    LEAVE,
    MAX_PARTICIPANTS,
    AnalyticsConfig,
    ParticipantEvent,
    SegmenterConfig,
    SpeakingSegment,
    Timestamp,
    VolumeSample,
    configs_from_overrides,
    is_valid_id,
)
from .mediator import MediatorFrame, compute_frame
from .segmenter import OutOfOrderSample, Segmenter
from .store import EventStore, SessionClosed, UnknownSession

log = logging.getLogger(__name__)

MAX_BATCH = 1000


class InvalidConfig(Exception):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class DuplicateJoin(Exception):
    pass


class NotJoined(Exception):
    pass


class TooManyParticipants(Exception):
    pass


class MalformedBatch(Exception):
    pass


class Subscriber(Protocol):
    """A stream consumer; offer returns False once its buffer overflowed."""

    def offer(self, envelope: dict) -> bool: ...

    def request_close(self, code: int, reason: str) -> None: ...


@dataclass
class _SessionRuntime:
    sid: str
    seg_cfg: SegmenterConfig
    ana_cfg: AnalyticsConfig
    created_t: Timestamp
    segmenter: Segmenter
    lock: threading.RLock = field(default_factory=threading.RLock)
    events: list[ParticipantEvent] = field(default_factory=list)
    segments: list[SpeakingSegment] = field(default_factory=list)
    joined: set[str] = field(default_factory=set)
    watermark: Timestamp = 0
    prev_frame: MediatorFrame | None = None
    latest_stats: dict | None = None
    latest_stats_seq: int = 0
    latest_frame: dict | None = None
    latest_frame_seq: int = 0
    subscribers: list[Subscriber] = field(default_factory=list)
    closed: bool = False
    last_tick_mono: float = field(default_factory=time.monotonic)
    tick_errors: int = 0


def _wall_ms() -> int:
    return int(time.time() * 1000)


class MeetingService:
    """The in-process face of the whole pipeline; the HTTP layer is a shim
    over these methods. Restores every session found in the data directory."""

    def __init__(
        self,
        data_dir,
        clock: Callable[[], int] = _wall_ms,
        segmenter_defaults: dict | None = None,
        analytics_defaults: dict | None = None,
    ):
        self.clock = clock
        self.store = EventStore(data_dir, clock=clock)
        self.segmenter_defaults = segmenter_defaults or {}
        self.analytics_defaults = analytics_defaults or {}
        self._sessions: dict[str, _SessionRuntime] = {}
        self._lock = threading.Lock()
        for sid in self.store.session_ids():
            self._restore(sid)

    # -- session lifecycle ---------------------------------------------------

    def create_session(
        self,
        segmenter: dict | None = None,
        analytics: dict | None = None,
        session_id: str | None = None,
    ) -> str:
        seg_cfg, ana_cfg, violations = configs_from_overrides(
            {**self.segmenter_defaults, **(segmenter or {})},
            {**self.analytics_defaults, **(analytics or {})},
        )
        if violations:
            raise InvalidConfig(violations)
        sid = session_id or secrets.token_urlsafe(9)
        if not is_valid_id(sid):
            raise InvalidConfig([f"invalid session id {sid!r}"])

        created = self.clock()
        self.store.create_session(sid, seg_cfg, ana_cfg, created)
        rt = _SessionRuntime(
            sid=sid,
            seg_cfg=seg_cfg,
            ana_cfg=ana_cfg,
            created_t=created,
            segmenter=Segmenter(seg_cfg),
            watermark=created,
        )
        with self._lock:
            self._sessions[sid] = rt
        with rt.lock:
            self._publish_tick(rt)  # zeroed stats and empty frame, seqs 1 and 2
        return sid

    def close_session(self, sid: str) -> None:
        rt = self._runtime(sid)
        with rt.lock:
            if rt.closed:
                raise SessionClosed(sid)
            self._flush_participant(rt, None)
            self._publish_tick(rt)
            rt.closed = True
            self.store.close_session(sid)
            for sub in list(rt.subscribers):
                sub.request_close(1000, "session closed")
            rt.subscribers.clear()

    def session_exists(self, sid: str) -> bool:
        with self._lock:
            return sid in self._sessions

    def session_config(self, sid: str) -> tuple[SegmenterConfig, AnalyticsConfig]:
        rt = self._runtime(sid)
        return rt.seg_cfg, rt.ana_cfg

    # -- participants ----------------------------------------------------------

    def join(self, sid: str, participant: str) -> int:
        if not is_valid_id(participant):
            raise MalformedBatch(f"invalid participant id {participant!r}")
        rt = self._runtime(sid)
        with rt.lock:
            if rt.closed:
                raise SessionClosed(sid)
            if participant in rt.joined:
                raise DuplicateJoin(participant)
            if len(rt.joined) >= MAX_PARTICIPANTS:
                raise TooManyParticipants(f"session limited to {MAX_PARTICIPANTS} participants")
            ev = ParticipantEvent(participant, self.clock(), JOIN)
            seq = self.store.append(sid, store_mod.PARTICIPANT_EVENT, ev.to_dict(), ev.t)
            rt.events.append(ev)
            rt.joined.add(participant)
            rt.watermark = max(rt.watermark, ev.t)
            self._fan_out(rt, {"type": "participant_event", "session": sid, "seq": seq, "payload": ev.to_dict()})
            return seq

    def leave(self, sid: str, participant: str) -> int:
        rt = self._runtime(sid)
        with rt.lock:
            if rt.closed:
                raise SessionClosed(sid)
            if participant not in rt.joined:
                raise NotJoined(participant)
            ev = ParticipantEvent(participant, self.clock(), LEAVE)
            seq = self.store.append(sid, store_mod.PARTICIPANT_EVENT, ev.to_dict(), ev.t)
            rt.events.append(ev)
            rt.joined.discard(participant)
            rt.watermark = max(rt.watermark, ev.t)
            self._flush_participant(rt, participant)
            self._fan_out(rt, {"type": "participant_event", "session": sid, "seq": seq, "payload": ev.to_dict()})
            return seq

    # -- ingestion -------------------------------------------------------------

    def ingest(self, sid: str, samples: list[dict]) -> tuple[int, int]:
        """Feed a batch of raw sample dicts; returns (accepted, dropped).

        Malformed entries fail the whole batch; well-formed samples that are
        out of range, out of order, or for a non-joined participant are
        dropped individually.
        """
        if not isinstance(samples, list) or len(samples) > MAX_BATCH:
            raise MalformedBatch(f"batch must be a list of at most {MAX_BATCH} samples")
        parsed = [self._parse_sample(i, raw) for i, raw in enumerate(samples)]

        rt = self._runtime(sid)
        accepted: list[VolumeSample] = []
        emitted: list[SpeakingSegment] = []
        dropped = 0
        with rt.lock:
            if rt.closed:
                raise SessionClosed(sid)
            for s in parsed:
                if s.participant not in rt.joined or not (0.0 <= s.volume <= 1.0):
                    dropped += 1
                    continue
                try:
                    emitted.extend(rt.segmenter.ingest(s))
                except OutOfOrderSample:
                    dropped += 1
                    continue
                accepted.append(s)
                rt.watermark = max(rt.watermark, s.t)
            if accepted:
                self.store.append(sid, store_mod.SAMPLE_BATCH, {"samples": [s.to_dict() for s in accepted]})
                for seg in emitted:
                    self.store.append(sid, store_mod.SEGMENT, seg.to_dict())
                rt.segments.extend(emitted)
        return len(accepted), dropped

    @staticmethod
    def _parse_sample(i: int, raw: object) -> VolumeSample:
        if not isinstance(raw, dict):
            raise MalformedBatch(f"sample {i} is not an object")
        try:
            participant, t, volume = raw["participant"], raw["t"], raw["volume"]
        except (KeyError, TypeError):
            raise MalformedBatch(f"sample {i} is missing participant/t/volume") from None
        if not is_valid_id(participant):
            raise MalformedBatch(f"sample {i} has an invalid participant id")
        if isinstance(t, bool) or not isinstance(t, int) or t < 0:
            raise MalformedBatch(f"sample {i} has a bad timestamp")
        if isinstance(volume, bool) or not isinstance(volume, (int, float)):
            raise MalformedBatch(f"sample {i} has a non-numeric volume")
        return VolumeSample(participant, t, float(volume))

    # -- analytics ticks ---------------------------------------------------------

    def tick_session(self, sid: str, now: Timestamp | None = None) -> IntervalStats | None:
        """Recompute, persist, and publish one session's stats and frame.

        The window is anchored on the session's data watermark, not on `now`,
        so replayed and accelerated sessions stay self-consistent.
        """
        rt = self._runtime(sid)
        with rt.lock:
            if rt.closed:
                return None
            return self._publish_tick(rt)

    def tick_all(self, now: Timestamp | None = None) -> list[IntervalStats]:
        """One stats bundle per active session; a failure in one session is
        isolated and the rest still publish."""
        out = []
        with self._lock:
            sids = list(self._sessions)
        for sid in sids:
            try:
                stats = self.tick_session(sid, now)
            except Exception:
                log.exception("tick failed for session %s", sid)
                self._runtime(sid).tick_errors += 1
                continue
            if stats is not None:
                out.append(stats)
        return out

    def tick_due(self) -> int:
        """Tick every open session whose per-session cadence has elapsed."""
        with self._lock:
            runtimes = list(self._sessions.values())
        ticked = 0
        for rt in runtimes:
            wall = time.monotonic()
            if rt.closed or wall - rt.last_tick_mono < rt.ana_cfg.tick_ms / 1000.0:
                continue
            rt.last_tick_mono = wall
            try:
                self.tick_session(rt.sid)
                ticked += 1
            except Exception:
                log.exception("tick failed for session %s", rt.sid)
                rt.tick_errors += 1
        return ticked

    # -- reads ---------------------------------------------------------------

    def latest_stats(self, sid: str) -> dict:
        rt = self._runtime(sid)
        with rt.lock:
            return rt.latest_stats

    def latest_frame(self, sid: str) -> dict:
        rt = self._runtime(sid)
        with rt.lock:
            return rt.latest_frame

    def query_segments(self, sid: str, from_t: Timestamp, to_t: Timestamp) -> list[SpeakingSegment]:
        self._runtime(sid)  # 404 before 422 on unknown sessions
        return self.store.query_segments(sid, from_t, to_t)

    # -- streaming -------------------------------------------------------------

    def subscribe(self, sid: str, sub: Subscriber) -> None:
        """Register a consumer: it immediately receives the latest stats and
        frame envelopes, then every subsequent envelope in seq order."""
        rt = self._runtime(sid)
        with rt.lock:
            if rt.closed:
                raise SessionClosed(sid)
            sub.offer({"type": "stats", "session": sid, "seq": rt.latest_stats_seq, "payload": rt.latest_stats})
            sub.offer({"type": "frame", "session": sid, "seq": rt.latest_frame_seq, "payload": rt.latest_frame})
            rt.subscribers.append(sub)

    def unsubscribe(self, sid: str, sub: Subscriber) -> None:
        try:
            rt = self._runtime(sid)
        except UnknownSession:
            return
        with rt.lock:
            if sub in rt.subscribers:
                rt.subscribers.remove(sub)

    def subscriber_count(self, sid: str) -> int:
        rt = self._runtime(sid)
        with rt.lock:
            return len(rt.subscribers)

    # -- internals -------------------------------------------------------------

    def _runtime(self, sid: str) -> _SessionRuntime:
        with self._lock:
            try:
                return self._sessions[sid]
            except KeyError:
                raise UnknownSession(sid) from None

    def _flush_participant(self, rt: _SessionRuntime, participant: str | None) -> None:
        emitted = rt.segmenter.flush(participant)
        for seg in emitted:
            self.store.append(rt.sid, store_mod.SEGMENT, seg.to_dict())
        rt.segments.extend(emitted)

    def _publish_tick(self, rt: _SessionRuntime) -> IntervalStats:
        anchor = max(rt.watermark, rt.created_t)
        window = (max(0, anchor - rt.ana_cfg.window_ms), anchor)
        turns = derive_turns(rt.segments, rt.ana_cfg)
        stats = compute_interval_stats(
            rt.sid, anchor, rt.segments, turns, rt.events, window, rt.ana_cfg
        )
        frame = compute_frame(stats, rt.prev_frame, rt.ana_cfg)
        rt.prev_frame = frame

        stats_dict = stats.to_dict()
        frame_dict = frame.to_dict()
        rt.latest_stats_seq = self.store.append(rt.sid, store_mod.STATS, stats_dict)
        rt.latest_frame_seq = self.store.append(rt.sid, store_mod.FRAME, frame_dict)
        rt.latest_stats = stats_dict
        rt.latest_frame = frame_dict
        self._fan_out(rt, {"type": "stats", "session": rt.sid, "seq": rt.latest_stats_seq, "payload": stats_dict})
        self._fan_out(rt, {"type": "frame", "session": rt.sid, "seq": rt.latest_frame_seq, "payload": frame_dict})
        return stats

    @staticmethod
    def _fan_out(rt: _SessionRuntime, envelope: dict) -> None:
        for sub in list(rt.subscribers):
            if not sub.offer(envelope):
                rt.subscribers.remove(sub)
                sub.request_close(1013, "slow consumer")

    def _restore(self, sid: str) -> None:
        manifest = self.store.manifest(sid)
        seg_cfg = SegmenterConfig(**manifest["segmenter"])
        ana_cfg = AnalyticsConfig(**manifest["analytics"])
        rt = _SessionRuntime(
            sid=sid,
            seg_cfg=seg_cfg,
            ana_cfg=ana_cfg,
            created_t=manifest["created_t"],
            segmenter=Segmenter(seg_cfg),
            watermark=manifest["created_t"],
            closed=manifest["closed"],
        )

        def apply(event: dict) -> None:
            kind, payload = event["kind"], event["payload"]
            if kind == store_mod.PARTICIPANT_EVENT:
                ev = ParticipantEvent.from_dict(payload)
                rt.events.append(ev)
                if ev.kind == JOIN:
                    rt.joined.add(ev.participant)
                else:
                    rt.joined.discard(ev.participant)
                    rt.segments.extend(rt.segmenter.flush(ev.participant))
                rt.watermark = max(rt.watermark, ev.t)
            elif kind == store_mod.SAMPLE_BATCH:
                for raw in payload["samples"]:
                    s = VolumeSample.from_dict(raw)
                    rt.segments.extend(rt.segmenter.ingest(s))
                    rt.watermark = max(rt.watermark, s.t)
            elif kind == store_mod.STATS:
                rt.latest_stats = payload
                rt.latest_stats_seq = event["seq"]
            elif kind == store_mod.FRAME:
                rt.latest_frame = payload
                rt.latest_frame_seq = event["seq"]
                rt.prev_frame = MediatorFrame.from_dict(payload)
            # SEGMENT events are re-derived from the samples above; the
            # store already rebuilt its query index from them.

        count, error = self.store.replay(sid, apply)
        if error is not None:
            log.warning("session %s: replay stopped after %d events: %s", sid, count, error)
        if rt.closed:
            rt.segments.extend(rt.segmenter.flush(None))
        with self._lock:
            self._sessions[sid] = rt


class TickLoop(threading.Thread):
    """Background scheduler driving per-session stats recomputation."""

    POLL_S = 0.05

    def __init__(self, service: MeetingService):
        super().__init__(name="breakout-tick", daemon=True)
        self.service = service
        self._halt = threading.Event()

    def run(self) -> None:
        while not self._halt.wait(self.POLL_S):
            try:
                self.service.tick_due()
            except Exception:
                log.exception("tick loop iteration failed")

    def stop(self) -> None:
        self._halt.set()
        self.join(timeout=5)
