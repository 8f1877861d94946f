"""Speaking segmentation over per-participant volume streams.

A sample at or above the volume threshold opens or extends a run for its
participant. The run closes when a later above-threshold sample arrives more
than merge_gap_ms after the run's last above-threshold time (short dips are
bridged), or on flush. Closed runs end at their last above-threshold sample
time; runs shorter than min_segment_ms are discarded after merging.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .core import SegmenterConfig, SpeakingSegment, Timestamp, VolumeSample


class OutOfOrderSample(Exception):
    """Raised when a participant's sample regresses in time; the sample is dropped."""


@dataclass
class SegmenterState:
    """Mutable per-session segmentation state.

    At most one open run per participant: (run_start, last_above_t). The open
    run is the pending segment, confirmed against min_segment_ms at close.
    """

    runs: dict[str, list[Timestamp]] = field(default_factory=dict)
    last_sample_t: dict[str, Timestamp] = field(default_factory=dict)
    out_of_order_dropped: int = 0


class Segmenter:
    """Streaming segmenter; emits segments as runs close."""

    def __init__(self, cfg: SegmenterConfig):
        self.cfg = cfg
        self.state = SegmenterState()

    def ingest(self, sample: VolumeSample) -> list[SpeakingSegment]:
        """Feed one sample; returns any segments this sample closed.

        Samples for a participant must arrive in non-decreasing time order;
        a regressing sample is dropped (counter incremented) and raises
        OutOfOrderSample.
        """
        st = self.state
        pid = sample.participant
        last = st.last_sample_t.get(pid)
        if last is not None and sample.t < last:
            st.out_of_order_dropped += 1
            raise OutOfOrderSample(f"sample for {pid} at {sample.t} after {last}")
        st.last_sample_t[pid] = sample.t

        if sample.volume < self.cfg.volume_threshold:
            return []

        run = st.runs.get(pid)
        if run is None:
            st.runs[pid] = [sample.t, sample.t]
            return []
        if sample.t - run[1] <= self.cfg.merge_gap_ms:
            run[1] = sample.t
            return []
        # Next above-threshold sample beyond the gap: close at the last
        # above-threshold time, then start a fresh run here.
        emitted = self._close(pid)
        st.runs[pid] = [sample.t, sample.t]
        return emitted

    def flush(self, participant: str | None = None) -> list[SpeakingSegment]:
        """Close open runs (for one participant, or all) at their last
        above-threshold time and emit the ones passing min_segment_ms."""
        pids = [participant] if participant is not None else sorted(self.state.runs)
        emitted: list[SpeakingSegment] = []
        for pid in pids:
            emitted.extend(self._close(pid))
        return emitted

    def _close(self, pid: str) -> list[SpeakingSegment]:
        run = self.state.runs.pop(pid, None)
        if run is None:
            return []
        start, end = run
        if end - start >= self.cfg.min_segment_ms:
            return [SpeakingSegment(pid, start, end)]
        return []


def merge_intervals(intervals: list[tuple[Timestamp, Timestamp]]) -> list[tuple[Timestamp, Timestamp]]:
    """Union of closed intervals: sorted, with touching or overlapping ones merged."""
    merged: list[list[Timestamp]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]


def interval_total(intervals: list[tuple[Timestamp, Timestamp]]) -> int:
    return sum(b - a for a, b in intervals)


def overlap_intervals(
    segments: list[SpeakingSegment], window: tuple[Timestamp, Timestamp]
) -> list[tuple[Timestamp, Timestamp]]:
    """Maximal disjoint intervals inside the window where >=2 distinct
    participants have active segments.

    Sweep over segment boundaries clipped to the window: per-participant
    coverage is unioned first so one participant never counts twice.
    """
    w0, w1 = window
    if not w0 < w1:
        raise ValueError("window start must precede window end")

    by_pid: dict[str, list[tuple[Timestamp, Timestamp]]] = defaultdict(list)
    for s in segments:
        a, b = max(s.start, w0), min(s.end, w1)
        if a < b:
            by_pid[s.participant].append((a, b))
    if len(by_pid) < 2:
        return []

    deltas: dict[Timestamp, int] = defaultdict(int)
    for ivs in by_pid.values():
        for a, b in merge_intervals(ivs):
            deltas[a] += 1
            deltas[b] -= 1

    times = sorted(deltas)
    out: list[list[Timestamp]] = []
    depth = 0
    for i, t in enumerate(times):
        depth += deltas[t]
        if i + 1 >= len(times):
            break
        nxt = times[i + 1]
        if depth >= 2:
            # Adjacent covered gaps share an instant still covered by >=2
            # closed segments, so they form one maximal interval.
            if out and out[-1][1] == t:
                out[-1][1] = nxt
            else:
                out.append([t, nxt])
    return [(a, b) for a, b in out]
