"""Command-line entry points: server, simulator, and report generator."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path


def server_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="breakout-server", description="Run the analytics service.")
    parser.add_argument("--listen", default=os.environ.get("BREAKOUT_LISTEN_ADDR", "127.0.0.1:8008"),
                        help="host:port to bind (env BREAKOUT_LISTEN_ADDR)")
    parser.add_argument("--data-dir", default=os.environ.get("BREAKOUT_DATA_DIR", "./breakout-data"),
                        help="event log directory (env BREAKOUT_DATA_DIR)")
    parser.add_argument("--tick-ms", type=int, default=None, help="default stats tick for new sessions")
    parser.add_argument("--window-ms", type=int, default=None, help="default sliding window for new sessions")
    args = parser.parse_args(argv)

    token = os.environ.get("BREAKOUT_TOKEN")
    if not token:
        print("BREAKOUT_TOKEN must be set (bearer token for all endpoints)", file=sys.stderr)
        return 2

    import uvicorn

    from .api import create_app
    from .service import MeetingService, TickLoop

    analytics_defaults = {}
    if args.tick_ms is not None:
        analytics_defaults["tick_ms"] = args.tick_ms
    if args.window_ms is not None:
        analytics_defaults["window_ms"] = args.window_ms

    service = MeetingService(args.data_dir, analytics_defaults=analytics_defaults)
    app = create_app(service, token)
    ticker = TickLoop(service)
    ticker.start()

    host, _, port = args.listen.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    finally:
        ticker.stop()
    return 0


def sim_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="breakout-sim", description="Generate or drive a synthetic meeting.")
    parser.add_argument("--participants", type=int, required=True)
    parser.add_argument("--duration-min", type=float, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--matrix", help="JSON file holding a row-stochastic next-speaker matrix")
    parser.add_argument("--server", help="drive a live server at this base URL")
    parser.add_argument("--speed", type=float, default=1.0, help="pacing multiplier when driving a server")
    parser.add_argument("--out", help="write generated samples to this JSONL file")
    parser.add_argument("--truth", help="write ground-truth turns to this JSONL file")
    parser.add_argument("--overlap-prob", type=float, default=0.0)
    parser.add_argument("--turn-ms", type=float, default=2000.0, help="mean turn duration")
    parser.add_argument("--pause-ms", type=float, default=500.0, help="mean inter-turn silence")
    parser.add_argument("--token", default=os.environ.get("BREAKOUT_TOKEN"),
                        help="bearer token (env BREAKOUT_TOKEN)")
    args = parser.parse_args(argv)

    from .core import SegmenterConfig
    from .simulator import (
        ConversationModel,
        DriveError,
        drive,
        generate,
        uniform_off_diagonal,
        write_samples,
        write_turns,
    )

    matrix = None
    if args.matrix:
        matrix = json.loads(Path(args.matrix).read_text())
    model = ConversationModel(
        n=args.participants,
        matrix=matrix or uniform_off_diagonal(args.participants),
        turn_length_ms=args.turn_ms,
        pause_ms=args.pause_ms,
        seed=args.seed,
        overlap_prob=args.overlap_prob,
    )
    errors = model.validate()
    if errors:
        print("invalid model: " + "; ".join(errors), file=sys.stderr)
        return 2
    duration_ms = int(args.duration_min * 60000)

    if args.server:
        if not args.token:
            print("a token is required to drive a server (--token or BREAKOUT_TOKEN)", file=sys.stderr)
            return 2
        try:
            result = drive(
                model,
                duration_ms,
                args.server,
                token=args.token,
                speed=args.speed,
                truth_path=args.truth,
            )
        except DriveError as exc:
            print(f"drive failed: {exc}", file=sys.stderr)
            return 1
        print(
            f"session {result.session_id}: accepted {result.accepted} samples "
            f"({result.dropped} dropped), {len(result.segments)} segments, "
            f"{len(result.truth)} truth turns"
        )
        return 0

    samples, truth = generate(model, duration_ms, SegmenterConfig())
    if args.out:
        write_samples(args.out, samples)
    if args.truth:
        write_turns(args.truth, truth)
    print(f"generated {len(samples)} samples, {len(truth)} truth turns")
    return 0


def report_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="breakout-report", description="Render figures and CSVs from a session log.")
    parser.add_argument("--log", help="path to an events-<session>.jsonl file")
    parser.add_argument("--data-dir", help="service data directory (use with --session)")
    parser.add_argument("--session", help="session id inside --data-dir")
    parser.add_argument("--out-dir", required=True)
    args = parser.parse_args(argv)

    if args.log:
        log_path = Path(args.log)
    elif args.data_dir and args.session:
        log_path = Path(args.data_dir) / f"events-{args.session}.jsonl"
    else:
        parser.error("either --log or both --data-dir and --session are required")
        return 2
    if not log_path.exists():
        print(f"no such log: {log_path}", file=sys.stderr)
        return 1

    from .report import render_report

    written = render_report(log_path, args.out_dir)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(server_main())
