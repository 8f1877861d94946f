"""Offline session reports: figures and delimited exports from an event log.

Reads an ``events-<session>.jsonl`` file (plus its sidecar manifest when one
sits next to it), and writes PNG figures alongside CSV files into an output
directory. Everything is reconstructed from persisted events, so a report
shows exactly what the service computed and what live viewers saw.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import derive_turns, transition_matrix
from .core import AnalyticsConfig, ParticipantEvent, SpeakingSegment
from .segmenter import overlap_intervals


def load_session_log(log_path: str | Path) -> dict:
    """Parse a session log into per-kind lists, stopping at corruption."""
    out: dict = {"segments": [], "stats": [], "frames": [], "events": [], "session": None}
    expected = 1
    with open(log_path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                break
            if event.get("seq") != expected:
                break
            expected += 1
            kind, payload = event["kind"], event["payload"]
            if kind == "SEGMENT":
                out["segments"].append(SpeakingSegment.from_dict(payload))
            elif kind == "STATS":
                out["stats"].append(payload)
                out["session"] = payload.get("session", out["session"])
            elif kind == "FRAME":
                out["frames"].append(payload)
            elif kind == "PARTICIPANT_EVENT":
                out["events"].append(ParticipantEvent.from_dict(payload))
    return out


def _load_manifest(log_path: Path) -> dict | None:
    name = log_path.name
    if name.startswith("events-") and name.endswith(".jsonl"):
        sid = name[len("events-") : -len(".jsonl")]
        manifest = log_path.parent / f"session-{sid}.json"
        if manifest.exists():
            return json.loads(manifest.read_text())
    return None


def render_report(log_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Write all figures and CSVs for one session log; returns the paths."""
    log_path = Path(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = load_session_log(log_path)
    manifest = _load_manifest(log_path)
    ana_cfg = AnalyticsConfig(**manifest["analytics"]) if manifest else AnalyticsConfig()

    segments: list[SpeakingSegment] = data["segments"]
    participants = sorted({s.participant for s in segments} | {e.participant for e in data["events"]})
    t0 = min((s.start for s in segments), default=0)

    written = [
        _write_segments_csv(out_dir / "segments.csv", segments),
        _write_session_csv(out_dir / "stats_session.csv", data["stats"]),
        _write_participant_csv(out_dir / "stats_participants.csv", data["stats"]),
        _fig_timeline(out_dir / "timeline.png", segments, participants, t0),
        _fig_speaking_time(out_dir / "speaking_time.png", segments, participants),
        _fig_transitions(out_dir / "transition_matrix.png", segments, participants, ana_cfg),
        _fig_tick_series(out_dir / "turn_rate.png", data["stats"]),
        _fig_ball_path(out_dir / "ball_path.png", data["frames"]),
    ]
    return written


def _write_segments_csv(path: Path, segments: list[SpeakingSegment]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["participant", "start", "end", "duration_ms"])
        for s in sorted(segments, key=lambda s: (s.start, s.participant)):
            w.writerow([s.participant, s.start, s.end, s.duration_ms])
    return path


def _write_session_csv(path: Path, stats: list[dict]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tick", "window_start", "window_end", "turn_taking_per_min", "overlap_pct", "participants"])
        for st in stats:
            w.writerow(
                [
                    st["tick"],
                    st["window"][0],
                    st["window"][1],
                    st["turn_taking_per_min"],
                    st["overlap_pct"],
                    " ".join(st["participants_present"]),
                ]
            )
    return path


def _write_participant_csv(path: Path, stats: list[dict]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tick", "participant", "speaking_events", "speaking_time_ms", "turns"])
        for st in stats:
            for pid in st["participants_present"]:
                w.writerow(
                    [st["tick"], pid, st["speaking_events"][pid], st["speaking_time_ms"][pid], st["turns"][pid]]
                )
    return path


def _fig_timeline(path: Path, segments: list[SpeakingSegment], participants: list[str], t0: int) -> Path:
    fig, ax = plt.subplots(figsize=(10, 0.6 * max(len(participants), 2) + 1.5))
    index = {p: i for i, p in enumerate(participants)}
    for s in segments:
        ax.broken_barh([((s.start - t0) / 1000.0, s.duration_ms / 1000.0)], (index[s.participant] - 0.35, 0.7))
    if segments:
        hi = max(s.end for s in segments)
        for a, b in overlap_intervals(segments, (t0, hi + 1)):
            ax.axvspan((a - t0) / 1000.0, (b - t0) / 1000.0, color="red", alpha=0.2, lw=0)
    ax.set_yticks(range(len(participants)), participants)
    ax.set_xlabel("seconds since first segment")
    ax.set_title("speaking timeline (overlap shaded)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _fig_speaking_time(path: Path, segments: list[SpeakingSegment], participants: list[str]) -> Path:
    totals = {p: 0 for p in participants}
    for s in segments:
        totals[s.participant] += s.duration_ms
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(list(totals), [v / 1000.0 for v in totals.values()])
    ax.set_ylabel("speaking time (s)")
    ax.set_title("total speaking time")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _fig_transitions(
    path: Path, segments: list[SpeakingSegment], participants: list[str], cfg: AnalyticsConfig
) -> Path:
    turns = derive_turns(segments, cfg)
    matrix = transition_matrix(turns, participants)
    probs = np.array(matrix.probabilities) if participants else np.zeros((0, 0))
    fig, ax = plt.subplots(figsize=(5.5, 5))
    im = ax.imshow(probs, vmin=0.0, vmax=1.0, cmap="Greens")
    ax.set_xticks(range(len(participants)), participants, rotation=45)
    ax.set_yticks(range(len(participants)), participants)
    for i in range(len(participants)):
        for j in range(len(participants)):
            ax.text(j, i, f"{probs[i, j]:.2f}", ha="center", va="center", fontsize=8)
    ax.set_title("next-speaker probability (whole session)")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _fig_tick_series(path: Path, stats: list[dict]) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    ticks = range(len(stats))
    ax.plot(ticks, [s["turn_taking_per_min"] for s in stats], label="turns/min", color="tab:green")
    ax.set_xlabel("tick")
    ax.set_ylabel("turns per minute")
    ax2 = ax.twinx()
    ax2.plot(ticks, [s["overlap_pct"] for s in stats], label="overlap", color="tab:red", alpha=0.7)
    ax2.set_ylabel("overlap share")
    ax2.set_ylim(0, 1)
    ax.set_title("turn-taking rate and overlap per tick")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _fig_ball_path(path: Path, frames: list[dict]) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    circle = plt.Circle((0, 0), 1.0, fill=False, color="gray", ls="--")
    ax.add_patch(circle)
    xs = [f["ball"]["x"] for f in frames]
    ys = [f["ball"]["y"] for f in frames]
    if xs:
        intens = [f["ball"]["intensity"] for f in frames]
        ax.plot(xs, ys, color="lightgray", zorder=1)
        ax.scatter(xs, ys, c=intens, cmap="Greens", vmin=0, vmax=1, zorder=2, s=18)
    last_nodes = frames[-1]["nodes"] if frames else []
    for node in last_nodes:
        ax.plot(node["x"], node["y"], "o", color="tab:blue", ms=10, zorder=3)
        ax.annotate(node["participant"], (node["x"], node["y"]), textcoords="offset points", xytext=(6, 6))
    ax.set_xlim(-1.2, 1.2)
    ax.set_ylim(-1.2, 1.2)
    ax.set_aspect("equal")
    ax.set_title("feedback ball trajectory (shade = intensity)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
