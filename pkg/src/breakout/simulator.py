"""Deterministic synthetic meetings with known ground truth.

A next-speaker Markov chain with exponential turn and pause durations is
rendered into per-participant volume streams. The same model and seed always
produce bit-identical samples and truth turns, which makes the generator
usable as an end-to-end oracle: feed the samples through the service and
compare what comes back against the truth.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from .analytics import Turn
from .core import SegmenterConfig, SpeakingSegment, VolumeSample


def uniform_off_diagonal(n: int) -> list[list[float]]:
    """Row-stochastic matrix: never keep the floor, hand it to anyone else
    with equal probability (identity for n=1)."""
    if n == 1:
        return [[1.0]]
    p = 1.0 / (n - 1)
    return [[0.0 if i == j else p for j in range(n)] for i in range(n)]


@dataclass
class ConversationModel:
    """Generator parameters; `matrix` rows must each sum to 1."""

    n: int
    matrix: list[list[float]] = field(default_factory=list)
    turn_length_ms: float = 2000.0
    pause_ms: float = 500.0
    speak_volume: float = 0.7
    noise_volume: float = 0.05
    jitter: float = 0.04
    seed: int = 0
    overlap_prob: float = 0.0

    def __post_init__(self) -> None:
        if not self.matrix:
            self.matrix = uniform_off_diagonal(self.n)

    def validate(self) -> list[str]:
        errors = []
        if self.n < 1:
            errors.append("n must be >= 1")
        if len(self.matrix) != self.n or any(len(row) != self.n for row in self.matrix):
            errors.append(f"matrix must be {self.n}x{self.n}")
        else:
            for i, row in enumerate(self.matrix):
                if any(p < 0 for p in row):
                    errors.append(f"matrix row {i} has a negative entry")
                elif abs(sum(row) - 1.0) > 1e-9:
                    errors.append(f"matrix row {i} does not sum to 1")
        if not (0.0 <= self.overlap_prob <= 1.0):
            errors.append("overlap_prob out of [0,1]")
        if self.turn_length_ms <= 0 or self.pause_ms <= 0:
            errors.append("turn_length_ms and pause_ms must be positive")
        return errors

    def participants(self) -> list[str]:
        return [f"p{i}" for i in range(self.n)]


def draw_turns(model: ConversationModel, duration_ms: int) -> list[Turn]:
    """Draw the ground-truth turn sequence alone.

    One speaker holds the floor at a time unless overlap_prob kicks in, in
    which case the next turn starts before the current one ends.
    """
    errors = model.validate()
    if errors:
        raise ValueError("; ".join(errors))
    rng = random.Random(model.seed)
    pids = model.participants()

    truth: list[Turn] = []
    speaker = rng.randrange(model.n)
    t = 0.0
    while t < duration_ms:
        dur = rng.expovariate(1.0 / model.turn_length_ms)
        start, end = t, min(t + dur, float(duration_ms))
        if int(round(end)) - int(round(start)) >= 1:
            truth.append(Turn(pids[speaker], int(round(start)), int(round(end))))
        if end >= duration_ms:
            break
        if model.overlap_prob > 0 and rng.random() < model.overlap_prob:
            t = end - min(rng.expovariate(1.0 / 500.0), dur / 2.0)
        else:
            t = end + rng.expovariate(1.0 / model.pause_ms)
        speaker = _draw(rng, model.matrix[speaker])
    return truth


def generate(
    model: ConversationModel, duration_ms: int, cfg: SegmenterConfig
) -> tuple[list[VolumeSample], list[Turn]]:
    """Draw a turn sequence from the model and render it to volume samples.

    Samples are emitted for every participant at every multiple of
    sample_period_ms: speak_volume plus uniform jitter inside the speaker's
    turns, noise_volume plus jitter elsewhere, clamped to [0, 1]. Same model
    and seed, same bytes out.
    """
    truth = draw_turns(model, duration_ms)
    pids = model.participants()
    # The jitter stream must not depend on the turn draw count, so reseed
    # a dedicated generator rather than continuing the turn RNG.
    rng = random.Random(model.seed ^ 0x5EED5EED)

    active = {pid: [(u.start, u.end) for u in truth if u.participant == pid] for pid in pids}
    cursors = {pid: 0 for pid in pids}
    samples: list[VolumeSample] = []
    for k in range(0, duration_ms, cfg.sample_period_ms):
        for pid in pids:
            ivs, i = active[pid], cursors[pid]
            while i < len(ivs) and ivs[i][1] <= k:
                i += 1
            cursors[pid] = i
            speaking = i < len(ivs) and ivs[i][0] <= k < ivs[i][1]
            base = model.speak_volume if speaking else model.noise_volume
            v = base + rng.uniform(-model.jitter, model.jitter)
            samples.append(VolumeSample(pid, k, min(1.0, max(0.0, v))))
    return samples, truth


def _draw(rng: random.Random, row: list[float]) -> int:
    x = rng.random()
    acc = 0.0
    for j, p in enumerate(row):
        acc += p
        if x < acc:
            return j
    return len(row) - 1


@dataclass
class DriveResult:
    session_id: str
    base_t: int
    truth: list[Turn]
    segments: list[SpeakingSegment]
    accepted: int
    dropped: int


class DriveError(Exception):
    pass


def drive(
    model: ConversationModel,
    duration_ms: int,
    server_url: str,
    token: str,
    speed: float = 1.0,
    segmenter: dict | None = None,
    analytics: dict | None = None,
    truth_path: str | Path | None = None,
    on_session=None,
    batch_span_ms: int = 1000,
) -> DriveResult:
    """Run a generated meeting against a live server.

    Creates a session, joins the participants, streams sample batches paced
    at ``speed`` times real time (timestamps rebased onto the wall clock at
    session creation), then leaves everyone and closes the session. Returns
    the truth turns and the segments the server derived, both on the rebased
    timeline.
    """
    seg_cfg = SegmenterConfig(**{**SegmenterConfig().to_dict(), **(segmenter or {})})
    samples, truth = generate(model, duration_ms, seg_cfg)

    with httpx.Client(
        base_url=server_url, headers={"Authorization": f"Bearer {token}"}, timeout=30.0
    ) as client:
        body: dict = {}
        if segmenter:
            body["segmenter"] = segmenter
        if analytics:
            body["analytics"] = analytics
        sid = _request(client, "POST", "/v1/sessions", json=body).json()["session_id"]
        if on_session is not None:
            on_session(sid)

        base_t = int(time.time() * 1000)
        for pid in model.participants():
            _request(client, "POST", f"/v1/sessions/{sid}/participants", json={"participant_id": pid})

        accepted = dropped = 0
        started = time.monotonic()
        for batch in _batches(samples, batch_span_ms):
            target = started + batch[-1].t / 1000.0 / speed
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            payload = {"samples": [{"participant": s.participant, "t": base_t + s.t, "volume": s.volume} for s in batch]}
            counts = _request(client, "POST", f"/v1/sessions/{sid}/samples", json=payload).json()
            accepted += counts["accepted"]
            dropped += counts["dropped"]

        for pid in model.participants():
            _request(client, "DELETE", f"/v1/sessions/{sid}/participants/{pid}")
        _request(client, "DELETE", f"/v1/sessions/{sid}")

        resp = _request(
            client,
            "GET",
            f"/v1/sessions/{sid}/segments",
            params={"from": base_t, "to": base_t + duration_ms + 1},
        )
        segments = [SpeakingSegment.from_dict(d) for d in resp.json()]

    rebased = [Turn(u.participant, base_t + u.start, base_t + u.end) for u in truth]
    if truth_path is not None:
        write_turns(truth_path, rebased)
    return DriveResult(sid, base_t, rebased, segments, accepted, dropped)


def _batches(samples: list[VolumeSample], span_ms: int):
    batch: list[VolumeSample] = []
    for s in samples:
        if batch and (s.t - batch[0].t >= span_ms or len(batch) >= 900):
            yield batch
            batch = []
        batch.append(s)
    if batch:
        yield batch


def _request(client: httpx.Client, method: str, url: str, attempts: int = 3, **kw) -> httpx.Response:
    last: Exception | None = None
    for i in range(attempts):
        try:
            resp = client.request(method, url, **kw)
            if resp.status_code >= 500:
                raise DriveError(f"{method} {url}: server error {resp.status_code}")
            if resp.status_code >= 400:
                raise DriveError(f"{method} {url}: {resp.status_code} {resp.text}")
            return resp
        except (httpx.TransportError, DriveError) as exc:
            last = exc
            if isinstance(exc, DriveError) and "server error" not in str(exc):
                raise
            if i + 1 < attempts:
                time.sleep(0.5 * (i + 1))
    raise DriveError(f"{method} {url} failed after {attempts} attempts: {last}")


def write_turns(path: str | Path, turns: list[Turn]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in turns:
            fh.write(json.dumps(u.to_dict(), separators=(",", ":")) + "\n")


def write_samples(path: str | Path, samples: list[VolumeSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps(s.to_dict(), separators=(",", ":")) + "\n")
