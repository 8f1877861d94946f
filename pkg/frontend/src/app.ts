/**
 * Wires the stream, the frame view, and the optional debug panel together.
 * Envelope handling is synchronous and network-free so the whole pipeline
 * can be driven from canned envelope logs in tests.
 */

import type { ClientConfig } from "./config.js";
import { streamUrl } from "./config.js";
import type { StreamEnvelope } from "./protocol.js";
import { ReconnectingStream, type SocketFactory } from "./socket.js";
import { DebugPanel } from "./debug.js";
import { MediatorView } from "./view.js";

const DEFAULT_TICK_MS = 5000;

export class App {
  readonly view: MediatorView;
  readonly debug: DebugPanel | null;
  readonly staleBanner: HTMLElement;
  stream: ReconnectingStream | null = null;

  private lastStatsAt: number | null = null;
  private tickIntervalMs = DEFAULT_TICK_MS;

  constructor(
    doc: Document,
    container: HTMLElement,
    private readonly cfg: ClientConfig,
    private readonly now: () => number = () => performance.now(),
  ) {
    this.view = new MediatorView(doc, 480, 480, cfg.render);
    container.append(this.view.svg);
    this.staleBanner = doc.createElement("div");
    this.staleBanner.className = "stale-banner";
    this.staleBanner.textContent = "connection stale: data is not live";
    this.staleBanner.style.display = "none";
    container.append(this.staleBanner);
    this.debug = cfg.debug ? new DebugPanel(doc) : null;
    if (this.debug) container.append(this.debug.root);
  }

  /** Route one envelope; exposed directly for replay tests. */
  handleEnvelope(envelope: StreamEnvelope): void {
    const now = this.now();
    if (envelope.type === "frame") {
      this.view.applyFrame(envelope.payload, now);
    } else if (envelope.type === "stats") {
      if (this.lastStatsAt !== null) {
        const delta = now - this.lastStatsAt;
        if (delta > 100) this.tickIntervalMs = delta;
      }
      this.lastStatsAt = now;
      this.debug?.update(envelope.payload);
    } else if (envelope.type === "participant_event") {
      this.view.noteParticipant(envelope.payload, now);
    }
    this.checkStale();
  }

  /** Stale when more than two tick intervals have passed without stats. */
  checkStale(): boolean {
    const stale =
      this.lastStatsAt !== null && this.now() - this.lastStatsAt > 2 * this.tickIntervalMs;
    this.staleBanner.style.display = stale ? "block" : "none";
    return stale;
  }

  start(factory?: SocketFactory): void {
    this.stream = new ReconnectingStream(
      streamUrl(this.cfg),
      {
        onEnvelope: (envelope) => this.handleEnvelope(envelope),
        onStatus: () => this.checkStale(),
      },
      factory,
    );
    this.stream.connect();
  }

  stop(): void {
    this.stream?.close();
  }
}
