"""Shared domain types, identifiers, time model, and per-session configuration."""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass

# Timestamps are integer milliseconds since the Unix epoch, UTC. Every
# comparison within a session happens on this single axis: log records are
# stamped with server receive time, volume samples keep the capture time
# they were submitted with.
Timestamp = int

# Session and participant identifiers: URL-safe, 1-64 chars.
_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")

JOIN = "JOIN"
LEAVE = "LEAVE"

# Circular layouts stop being legible past this; enforced at join time.
MAX_PARTICIPANTS = 16


def is_valid_id(value: object) -> bool:
    """True when value is a well-formed session/participant identifier."""
    return isinstance(value, str) and bool(_ID_RE.match(value))


@dataclass(frozen=True)
class VolumeSample:
    """One participant's normalized loudness in [0, 1] at an instant."""

    participant: str
    t: Timestamp
    volume: float

    def to_dict(self) -> dict:
        return {"participant": self.participant, "t": self.t, "volume": self.volume}

    @classmethod
    def from_dict(cls, d: dict) -> "VolumeSample":
        return cls(participant=d["participant"], t=int(d["t"]), volume=float(d["volume"]))


@dataclass(frozen=True)
class ParticipantEvent:
    """A join or leave observed for one participant."""

    participant: str
    t: Timestamp
    kind: str  # JOIN or LEAVE

    def to_dict(self) -> dict:
        return {"participant": self.participant, "t": self.t, "kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "ParticipantEvent":
        return cls(participant=d["participant"], t=int(d["t"]), kind=d["kind"])


@dataclass(frozen=True)
class SpeakingSegment:
    """A maximal detected speaking interval for one participant."""

    participant: str
    start: Timestamp
    end: Timestamp

    @property
    def duration_ms(self) -> int:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"participant": self.participant, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> "SpeakingSegment":
        return cls(participant=d["participant"], start=int(d["start"]), end=int(d["end"]))


@dataclass(frozen=True)
class SegmenterConfig:
    """Tuning knobs for volume-stream segmentation.

    volume_threshold  loudness at or above which a sample counts as speech
    merge_gap_ms      dips shorter than this are bridged into one segment
    min_segment_ms    closed segments shorter than this are discarded
    sample_period_ms  nominal client sampling period
    """

    volume_threshold: float = 0.15
    merge_gap_ms: int = 300
    min_segment_ms: int = 500
    sample_period_ms: int = 50

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AnalyticsConfig:
    """Tick cadence, sliding-window length, and feedback-frame tuning."""

    tick_ms: int = 5000
    window_ms: int = 60000
    turn_merge_gap_ms: int = 1000
    intensity_saturation_turns_per_min: float = 20.0
    ball_smoothing_alpha: float = 0.3

    def to_dict(self) -> dict:
        return asdict(self)


def validate_config(seg: SegmenterConfig, ana: AnalyticsConfig) -> list[str]:
    """Return the full list of violated invariants, empty when valid.

    Total function: never raises, reports every violation at once.
    """
    errors: list[str] = []
    if not (0.0 < seg.volume_threshold < 1.0):
        errors.append("volume_threshold out of (0,1)")
    for name in ("merge_gap_ms", "min_segment_ms", "sample_period_ms"):
        if getattr(seg, name) <= 0:
            errors.append(f"{name} must be positive")
    if seg.min_segment_ms < seg.sample_period_ms:
        errors.append("min_segment_ms < sample_period_ms")

    for name in ("tick_ms", "window_ms", "turn_merge_gap_ms"):
        if getattr(ana, name) <= 0:
            errors.append(f"{name} must be positive")
    if ana.intensity_saturation_turns_per_min <= 0:
        errors.append("intensity_saturation_turns_per_min must be positive")
    if not (0.0 < ana.ball_smoothing_alpha <= 1.0):
        errors.append("ball_smoothing_alpha out of (0,1]")
    if ana.tick_ms > ana.window_ms:
        errors.append("tick_ms > window_ms")
    return errors


_INT_FIELDS = {
    "merge_gap_ms",
    "min_segment_ms",
    "sample_period_ms",
    "tick_ms",
    "window_ms",
    "turn_merge_gap_ms",
}


def _apply_overrides(defaults, overrides: dict, label: str, errors: list[str]) -> dict:
    values = defaults.to_dict()
    for key, raw in (overrides or {}).items():
        if key not in values:
            errors.append(f"unknown {label} field '{key}'")
            continue
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            errors.append(f"{key} must be a number")
            continue
        if key in _INT_FIELDS:
            if float(raw) != int(raw):
                errors.append(f"{key} must be an integer")
                continue
            values[key] = int(raw)
        else:
            values[key] = float(raw)
    return values


def configs_from_overrides(
    segmenter: dict | None, analytics: dict | None
) -> tuple[SegmenterConfig, AnalyticsConfig, list[str]]:
    """Merge request overrides onto defaults and validate the result.

    Returns the merged configs plus all violations (unknown fields, bad
    types, range errors). Configs are only meaningful when the list is empty.
    """
    errors: list[str] = []
    seg = SegmenterConfig(**_apply_overrides(SegmenterConfig(), segmenter or {}, "segmenter", errors))
    ana = AnalyticsConfig(**_apply_overrides(AnalyticsConfig(), analytics or {}, "analytics", errors))
    errors.extend(validate_config(seg, ana))
    return seg, ana, errors
