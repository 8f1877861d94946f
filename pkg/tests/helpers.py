"""Small shared utilities for the integration-level tests."""

from __future__ import annotations

import json


class ManualClock:
    """Deterministic millisecond clock; advances only when told to."""

    def __init__(self, start_ms: int = 1_000_000):
        self.ms = start_ms

    def __call__(self) -> int:
        return self.ms

    def now(self) -> int:
        return self.ms

    def advance(self, delta_ms: int) -> int:
        self.ms += delta_ms
        return self.ms


def canonical(obj) -> str:
    """Canonical JSON text for byte-for-byte comparisons."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def steady_volume(pid: str, t0: int, t1: int, volume: float, period: int = 50) -> list[dict]:
    """Raw sample dicts at a fixed volume, inclusive of both endpoints."""
    return [{"participant": pid, "t": t, "volume": volume} for t in range(t0, t1 + 1, period)]


def match_turns(truth, recovered, min_overlap: float = 0.5) -> float:
    """Fraction of truth turns matched by a same-speaker recovered interval
    covering at least `min_overlap` of the truth turn."""
    if not truth:
        return 1.0
    matched = 0
    for t in truth:
        need = (t.end - t.start) * min_overlap
        for r in recovered:
            if r.participant != t.participant:
                continue
            overlap = min(t.end, r.end) - max(t.start, r.start)
            if overlap >= need:
                matched += 1
                break
    return matched / len(truth)


def max_row_l1(probabilities, reference) -> float:
    """Largest per-row L1 distance between two row-stochastic matrices."""
    worst = 0.0
    for row, ref in zip(probabilities, reference):
        worst = max(worst, sum(abs(a - b) for a, b in zip(row, ref)))
    return worst


def mean_row_l1(probabilities, reference) -> float:
    """Per-row L1 distance averaged over rows."""
    rows = [sum(abs(a - b) for a, b in zip(row, ref)) for row, ref in zip(probabilities, reference)]
    return sum(rows) / len(rows) if rows else 0.0
