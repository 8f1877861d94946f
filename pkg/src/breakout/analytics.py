"""Windowed conversation statistics: speaking events, turns, next-speaker
transition probabilities, turn-taking rate, and overlapped-speaking share.

Windows are half-open [start, end): a segment or turn belongs to the window
of its start; spans crossing an edge are clipped for time sums only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import JOIN, AnalyticsConfig, ParticipantEvent, SpeakingSegment, Timestamp
from .segmenter import interval_total, merge_intervals, overlap_intervals


@dataclass(frozen=True)
class Turn:
    """One or more consecutive same-participant segments, gap-merged."""

    participant: str
    start: Timestamp
    end: Timestamp

    def to_dict(self) -> dict:
        return {"participant": self.participant, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> "Turn":
        return cls(participant=d["participant"], start=int(d["start"]), end=int(d["end"]))


@dataclass(frozen=True)
class TransitionMatrix:
    """Directed next-speaker graph: counts[i][j] is how often participants[j]
    held the turn right after participants[i]; probabilities are row-normalized."""

    participants: list[str]
    counts: list[list[int]]
    probabilities: list[list[float]]

    def to_dict(self) -> dict:
        return {
            "participants": list(self.participants),
            "counts": [list(r) for r in self.counts],
            "probabilities": [list(r) for r in self.probabilities],
        }


@dataclass(frozen=True)
class IntervalStats:
    """The per-tick statistics bundle for one session and one window."""

    session: str
    tick: Timestamp
    window: tuple[Timestamp, Timestamp]
    speaking_events: dict[str, int]
    speaking_time_ms: dict[str, int]
    turns: dict[str, int]
    transitions: TransitionMatrix
    turn_taking_per_min: float
    overlap_pct: float
    participants_present: list[str]

    def to_dict(self) -> dict:
        return {
            "session": self.session,
            "tick": self.tick,
            "window": [self.window[0], self.window[1]],
            "speaking_events": dict(self.speaking_events),
            "speaking_time_ms": dict(self.speaking_time_ms),
            "turns": dict(self.turns),
            "transitions": self.transitions.to_dict(),
            "turn_taking_per_min": self.turn_taking_per_min,
            "overlap_pct": self.overlap_pct,
            "participants_present": list(self.participants_present),
        }


def derive_turns(segments: list[SpeakingSegment], cfg: AnalyticsConfig) -> list[Turn]:
    """Coalesce each participant's consecutive segments into turns when the
    inter-segment gap is at most turn_merge_gap_ms; result sorted by start."""
    by_pid: dict[str, list[SpeakingSegment]] = {}
    for s in segments:
        by_pid.setdefault(s.participant, []).append(s)

    turns: list[Turn] = []
    for pid, segs in by_pid.items():
        segs = sorted(segs, key=lambda s: (s.start, s.end))
        start, end = None, None
        for s in segs:
            if start is not None and s.start - end <= cfg.turn_merge_gap_ms:
                end = max(end, s.end)
            else:
                if start is not None:
                    turns.append(Turn(pid, start, end))
                start, end = s.start, s.end
        if start is not None:
            turns.append(Turn(pid, start, end))
    return sorted(turns, key=lambda t: (t.start, t.end, t.participant))


def transition_matrix(turns: list[Turn], participants: list[str]) -> TransitionMatrix:
    """Count consecutive speaker pairs over the turn sequence sorted by start.

    Self-pairs count too; they arise when one participant's turns are split
    by more than the turn-merge gap. Rows with no outgoing transitions stay
    all-zero in the probability matrix.
    """
    idx = {p: i for i, p in enumerate(participants)}
    n = len(participants)
    counts = [[0] * n for _ in range(n)]
    ordered = sorted(turns, key=lambda t: (t.start, t.end, t.participant))
    for prev, nxt in zip(ordered, ordered[1:]):
        counts[idx[prev.participant]][idx[nxt.participant]] += 1

    probabilities: list[list[float]] = []
    for row in counts:
        total = sum(row)
        if total > 0:
            probabilities.append([c / total for c in row])
        else:
            probabilities.append([0.0] * n)
    return TransitionMatrix(participants=list(participants), counts=counts, probabilities=probabilities)


def participants_present(events: list[ParticipantEvent], at: Timestamp) -> list[str]:
    """Participants with an active JOIN not yet followed by LEAVE at time
    `at`, ordered by their latest join."""
    joined: dict[str, bool] = {}
    last_join: dict[str, tuple[Timestamp, int]] = {}
    for i, ev in enumerate(events):
        if ev.t > at:
            continue
        if ev.kind == JOIN:
            joined[ev.participant] = True
            last_join[ev.participant] = (ev.t, i)
        else:
            joined[ev.participant] = False
    return sorted((p for p, on in joined.items() if on), key=lambda p: last_join[p])


def compute_interval_stats(
    session: str,
    tick: Timestamp,
    segments: list[SpeakingSegment],
    turns: list[Turn],
    events: list[ParticipantEvent],
    window: tuple[Timestamp, Timestamp],
    cfg: AnalyticsConfig,
) -> IntervalStats:
    """Aggregate one window of statistics for the currently present group.

    `turns` must be derived from the same segment history (derive_turns), so
    spans crossing the window edge keep their true start. All maps cover
    exactly the present participants; speech by departed participants is left
    to offline analysis of the log.
    """
    w0, w1 = window
    present = participants_present(events, w1)
    pset = set(present)

    speaking_events = {p: 0 for p in present}
    speaking_time = {p: 0 for p in present}
    clipped: list[SpeakingSegment] = []
    for s in segments:
        if s.participant not in pset:
            continue
        if w0 <= s.start < w1:
            speaking_events[s.participant] += 1
        a, b = max(s.start, w0), min(s.end, w1)
        if a < b:
            speaking_time[s.participant] += b - a
            clipped.append(SpeakingSegment(s.participant, a, b))

    turns_in = [t for t in turns if t.participant in pset and w0 <= t.start < w1]
    turn_counts = {p: 0 for p in present}
    for t in turns_in:
        turn_counts[t.participant] += 1
    matrix = transition_matrix(turns_in, present)

    union_ms = interval_total(merge_intervals([(s.start, s.end) for s in clipped]))
    overlap_ms = interval_total(overlap_intervals(clipped, window)) if union_ms else 0
    overlap_pct = overlap_ms / union_ms if union_ms > 0 else 0.0

    return IntervalStats(
        session=session,
        tick=tick,
        window=(w0, w1),
        speaking_events=speaking_events,
        speaking_time_ms=speaking_time,
        turns=turn_counts,
        transitions=matrix,
        turn_taking_per_min=len(turns_in) * 60000.0 / (w1 - w0) if w1 > w0 else 0.0,
        overlap_pct=overlap_pct,
        participants_present=present,
    )
