"""Shared randomized-input builders for the oracle-equivalence tests."""

from __future__ import annotations

import random

import pytest

from breakout.core import AnalyticsConfig, ParticipantEvent, SegmenterConfig, SpeakingSegment, VolumeSample


def random_segmenter_config(rng: random.Random) -> SegmenterConfig:
    period = rng.choice([10, 20, 50, 100])
    merge_gap = rng.choice([50, 100, 250, 300, 500])
    return SegmenterConfig(
        volume_threshold=rng.uniform(0.1, 0.6),
        merge_gap_ms=merge_gap,
        min_segment_ms=rng.choice([period, 100, 200, 500, 800]),
        sample_period_ms=period,
    )


def random_stream(rng: random.Random, cfg: SegmenterConfig, participants: int | None = None) -> list[VolumeSample]:
    """Sample streams that hammer the rule boundaries: dips exactly at the
    merge gap, runs exactly at the minimum duration, duplicate timestamps,
    and volumes exactly on the threshold."""
    n = participants or rng.randint(1, 4)
    samples: list[VolumeSample] = []
    for i in range(n):
        pid = f"p{i}"
        t = rng.randrange(0, 200)
        speaking = rng.random() < 0.5
        for _ in range(rng.randrange(30, 180)):
            if rng.random() < 0.25:
                speaking = not speaking
            if speaking:
                v = cfg.volume_threshold if rng.random() < 0.1 else rng.uniform(cfg.volume_threshold, 1.0)
            else:
                v = rng.uniform(0.0, max(cfg.volume_threshold - 1e-6, 0.0))
            samples.append(VolumeSample(pid, t, v))
            t += rng.choice(
                [
                    0,
                    cfg.sample_period_ms,
                    cfg.sample_period_ms,
                    cfg.sample_period_ms,
                    cfg.merge_gap_ms,
                    cfg.merge_gap_ms + 1,
                    cfg.min_segment_ms,
                    cfg.merge_gap_ms * 3,
                ]
            )
    samples.sort(key=lambda s: (s.t, s.participant))
    return samples


def random_grid_session(
    rng: random.Random, grid: int = 10
) -> tuple[list[SpeakingSegment], list[ParticipantEvent], tuple[int, int], AnalyticsConfig]:
    """A random bundle of per-participant disjoint segments, join/leave
    events, and a window, all aligned to the oracle grid."""
    n = rng.randint(1, 5)
    w0 = rng.randrange(0, 300) * grid
    window_ms = rng.randrange(100, 600) * grid
    w1 = w0 + window_ms
    cfg = AnalyticsConfig(
        tick_ms=window_ms,
        window_ms=window_ms,
        turn_merge_gap_ms=rng.choice([100, 300, 500, 1000, 1500]),
    )

    events: list[ParticipantEvent] = []
    segments: list[SpeakingSegment] = []
    for i in range(n):
        pid = f"p{i}"
        events.append(ParticipantEvent(pid, rng.randrange(0, max(w0 // grid, 1)) * grid, "JOIN"))
        t = rng.randrange(0, 200) * grid
        for _ in range(rng.randrange(0, 12)):
            start = t + rng.randrange(1, 60) * grid
            end = start + rng.randrange(1, 80) * grid
            segments.append(SpeakingSegment(pid, start, end))
            t = end
        if rng.random() < 0.25:
            # Some participants leave before the window closes.
            events.append(ParticipantEvent(pid, rng.randrange(w0 // grid, w1 // grid + 1) * grid, "LEAVE"))
    events.sort(key=lambda e: e.t)
    segments.sort(key=lambda s: (s.participant, s.start))
    return segments, events, (w0, w1), cfg


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xBEEF)
