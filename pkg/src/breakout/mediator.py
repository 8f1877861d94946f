"""Render-ready feedback frames: participants on a circle, a center ball
drawn toward whoever takes more turns, glowing with the group's turn rate,
and spokes weighted by speaking-time share."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import AnalyticsConfig, Timestamp
from .analytics import IntervalStats


@dataclass(frozen=True)
class Node:
    participant: str
    angle: float
    x: float
    y: float

    def to_dict(self) -> dict:
        return {"participant": self.participant, "angle": self.angle, "x": self.x, "y": self.y}


@dataclass(frozen=True)
class Ball:
    x: float
    y: float
    intensity: float

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "intensity": self.intensity}


@dataclass(frozen=True)
class MediatorFrame:
    """Wire-contract frame: node layout, ball position/intensity, edge weights."""

    session: str
    tick: Timestamp
    nodes: list[Node]
    ball: Ball
    edges: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "session": self.session,
            "tick": self.tick,
            "nodes": [n.to_dict() for n in self.nodes],
            "ball": self.ball.to_dict(),
            "edges": dict(self.edges),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MediatorFrame":
        return cls(
            session=d["session"],
            tick=int(d["tick"]),
            nodes=[Node(n["participant"], n["angle"], n["x"], n["y"]) for n in d["nodes"]],
            ball=Ball(d["ball"]["x"], d["ball"]["y"], d["ball"]["intensity"]),
            edges=dict(d["edges"]),
        )


def layout_nodes(participants: list[str]) -> list[Node]:
    """Place participant i of n at angle pi/2 - 2*pi*i/n on the unit circle,
    so the first joiner sits at the top and order runs clockwise."""
    n = len(participants)
    nodes = []
    for i, pid in enumerate(participants):
        angle = math.pi / 2 - 2 * math.pi * i / n
        nodes.append(Node(pid, angle, math.cos(angle), math.sin(angle)))
    return nodes


def compute_frame(
    stats: IntervalStats, prev: MediatorFrame | None, cfg: AnalyticsConfig
) -> MediatorFrame:
    """Map one window's statistics onto a frame.

    The raw ball position is the turn-share weighted centroid of the node
    positions (origin while nobody has taken a turn); the published position
    blends it with the previous frame's ball to damp tick-to-tick jitter.
    Smoothing resets whenever the participant set changes.
    """
    participants = stats.participants_present
    if not participants:
        return MediatorFrame(stats.session, stats.tick, [], Ball(0.0, 0.0, 0.0), {})

    nodes = layout_nodes(participants)
    total_turns = sum(stats.turns.get(p, 0) for p in participants)
    if total_turns > 0:
        raw_x = sum(stats.turns.get(n.participant, 0) / total_turns * n.x for n in nodes)
        raw_y = sum(stats.turns.get(n.participant, 0) / total_turns * n.y for n in nodes)
    else:
        raw_x, raw_y = 0.0, 0.0

    if prev is None or [n.participant for n in prev.nodes] != list(participants):
        bx, by = raw_x, raw_y
    else:
        alpha = cfg.ball_smoothing_alpha
        bx = alpha * raw_x + (1 - alpha) * prev.ball.x
        by = alpha * raw_y + (1 - alpha) * prev.ball.y

    # Convex blend of convex combinations: must stay inside the unit disc.
    assert bx * bx + by * by <= 1 + 1e-9, f"ball escaped the unit disc: ({bx}, {by})"

    intensity = min(1.0, stats.turn_taking_per_min / cfg.intensity_saturation_turns_per_min)

    total_time = sum(stats.speaking_time_ms.get(p, 0) for p in participants)
    if total_time > 0:
        edges = {p: stats.speaking_time_ms.get(p, 0) / total_time for p in participants}
    else:
        edges = {p: 0.0 for p in participants}

    return MediatorFrame(stats.session, stats.tick, nodes, Ball(bx, by, intensity), edges)
