"""Independent brute-force oracles used to check the streaming implementations.

Everything here deliberately works on fully materialized timelines with
whole-array passes, trading speed for obviousness. The production code must
agree with these, never the other way around.
"""

from __future__ import annotations

from collections import defaultdict

from breakout.core import (
    JOIN,
    AnalyticsConfig,
    ParticipantEvent,
    SegmenterConfig,
    SpeakingSegment,
    VolumeSample,
)

GRID_MS = 10  # resolution of the timeline-discretization oracle


def oracle_segments(samples: list[VolumeSample], cfg: SegmenterConfig) -> list[SpeakingSegment]:
    """Whole-timeline reference segmentation.

    Materializes each participant's above-threshold sample times, groups them
    into runs (consecutive gaps <= merge_gap_ms), applies a second merge pass
    over the closed runs, then drops runs shorter than min_segment_ms.
    Merge happens before the minimum-duration filter.
    """
    by_pid: dict[str, list[int]] = defaultdict(list)
    for s in samples:
        if s.volume >= cfg.volume_threshold:
            by_pid[s.participant].append(s.t)

    out: list[SpeakingSegment] = []
    for pid in sorted(by_pid):
        times = sorted(by_pid[pid])
        runs: list[list[int]] = []
        for t in times:
            if runs and t - runs[-1][1] <= cfg.merge_gap_ms:
                runs[-1][1] = t
            else:
                runs.append([t, t])
        merged: list[list[int]] = []
        for run in runs:
            if merged and run[0] - merged[-1][1] <= cfg.merge_gap_ms:
                merged[-1][1] = max(merged[-1][1], run[1])
            else:
                merged.append(run)
        for start, end in merged:
            if end - start >= cfg.min_segment_ms:
                out.append(SpeakingSegment(pid, start, end))
    return sorted(out, key=lambda s: (s.participant, s.start))


def oracle_pair_counts(ordered_speakers: list[str], participants: list[str]) -> list[list[int]]:
    """Count next-speaker pairs by direct enumeration over the turn sequence."""
    idx = {p: i for i, p in enumerate(participants)}
    n = len(participants)
    counts = [[0] * n for _ in range(n)]
    for a, b in zip(ordered_speakers, ordered_speakers[1:]):
        counts[idx[a]][idx[b]] += 1
    return counts


def oracle_turns(segments: list[SpeakingSegment], gap_ms: int) -> list[tuple[str, int, int]]:
    """Coalesce per-participant segments into turns, independently of the
    production pass: sorts, scans, merges when the inter-segment gap <= gap_ms."""
    by_pid: dict[str, list[SpeakingSegment]] = defaultdict(list)
    for s in segments:
        by_pid[s.participant].append(s)
    turns: list[tuple[str, int, int]] = []
    for pid, segs in by_pid.items():
        segs = sorted(segs, key=lambda s: s.start)
        cur = None
        for s in segs:
            if cur is not None and s.start - cur[1] <= gap_ms:
                cur[1] = max(cur[1], s.end)
            else:
                if cur is not None:
                    turns.append((pid, cur[0], cur[1]))
                cur = [s.start, s.end]
        if cur is not None:
            turns.append((pid, cur[0], cur[1]))
    return sorted(turns, key=lambda t: (t[1], t[2], t[0]))


def _present_at(events: list[ParticipantEvent], t: int) -> list[str]:
    state: dict[str, bool] = {}
    last_join: dict[str, tuple[int, int]] = {}
    for i, ev in enumerate(events):
        if ev.t > t:
            continue
        if ev.kind == JOIN:
            state[ev.participant] = True
            last_join[ev.participant] = (ev.t, i)
        else:
            state[ev.participant] = False
    present = [p for p, joined in state.items() if joined]
    return sorted(present, key=lambda p: last_join[p])


def oracle_interval_stats(
    segments: list[SpeakingSegment],
    events: list[ParticipantEvent],
    window: tuple[int, int],
    cfg: AnalyticsConfig,
) -> dict:
    """Reference statistics computed off a 10 ms discretized timeline.

    Counts are exact; time sums and overlap are exact whenever all segment
    boundaries and the window fall on the 10 ms grid.
    """
    w0, w1 = window
    present = _present_at(events, w1)
    present_set = set(present)
    segs = [s for s in segments if s.participant in present_set]

    cells = range(w0, w1, GRID_MS)
    covered: dict[str, set[int]] = {p: set() for p in present}
    for s in segs:
        for c in cells:
            if s.start <= c and c + GRID_MS <= s.end:
                covered[s.participant].add(c)

    speaking_time = {p: GRID_MS * len(covered[p]) for p in present}
    depth = defaultdict(int)
    for p in present:
        for c in covered[p]:
            depth[c] += 1
    union_ms = GRID_MS * sum(1 for c in depth.values() if c >= 1)
    overlap_ms = GRID_MS * sum(1 for c in depth.values() if c >= 2)
    overlap_pct = overlap_ms / union_ms if union_ms > 0 else 0.0

    speaking_events = {p: 0 for p in present}
    for s in segs:
        if w0 <= s.start < w1:
            speaking_events[s.participant] += 1

    all_turns = oracle_turns(segs, cfg.turn_merge_gap_ms)
    in_window = [t for t in all_turns if w0 <= t[1] < w1]
    turn_counts = {p: 0 for p in present}
    for pid, _, _ in in_window:
        turn_counts[pid] += 1
    counts = oracle_pair_counts([t[0] for t in in_window], present)

    return {
        "participants_present": present,
        "speaking_events": speaking_events,
        "speaking_time_ms": speaking_time,
        "turns": turn_counts,
        "transition_counts": counts,
        "turn_taking_per_min": len(in_window) * 60000.0 / (w1 - w0),
        "overlap_pct": overlap_pct,
    }


def oracle_overlap_points(
    segments: list[SpeakingSegment], intervals: list[tuple[int, int]], window: tuple[int, int]
) -> bool:
    """Point-sample each reported interval and confirm >=2 distinct speakers."""
    for a, b in intervals:
        if not (window[0] <= a < b <= window[1]):
            return False
        for frac in (0.25, 0.5, 0.75):
            t = a + (b - a) * frac
            speakers = {s.participant for s in segments if s.start <= t <= s.end}
            if len(speakers) < 2:
                return False
    return True
