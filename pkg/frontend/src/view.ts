/**
 * SVG renderer for mediator frames.
 *
 * Rendering is a pure function of the latest frame plus animation time:
 * `applyFrame` records where the ball animates from, `renderAt(now)` writes
 * the DOM for that instant. The ball tweens over at most ANIM_MS; everything
 * else snaps. All numbers come from server envelopes; the only geometry made
 * locally is the provisional circle spot for a participant who joined after
 * the last frame.
 */

import type { MediatorFrame, FrameNode, ParticipantEvent } from "./protocol.js";
import type { RenderConfig } from "./config.js";

export const ANIM_MS = 400;

const SVG_NS = "http://www.w3.org/2000/svg";

interface NodeParts {
  line: SVGLineElement;
  dot: SVGCircleElement;
  label: SVGTextElement;
}

export class MediatorView {
  readonly svg: SVGSVGElement;
  private readonly doc: Document;
  private readonly render: RenderConfig;
  private readonly cx: number;
  private readonly cy: number;
  private readonly radius: number;

  private frame: MediatorFrame | null = null;
  private fromBall = { x: 0, y: 0 };
  private animStart = 0;
  private parts = new Map<string, NodeParts>();
  private readonly edgeLayer: SVGGElement;
  private readonly nodeLayer: SVGGElement;
  private readonly ball: SVGCircleElement;

  constructor(doc: Document, width: number, height: number, render: RenderConfig) {
    this.doc = doc;
    this.render = render;
    this.cx = width / 2;
    this.cy = height / 2;
    this.radius = Math.min(width, height) / 2 - render.nodeRadius - 12;

    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("width", String(width));
    this.svg.setAttribute("height", String(height));
    this.svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
    this.edgeLayer = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.edgeLayer.setAttribute("class", "edges");
    this.nodeLayer = doc.createElementNS(SVG_NS, "g") as SVGGElement;
    this.nodeLayer.setAttribute("class", "nodes");
    this.ball = doc.createElementNS(SVG_NS, "circle") as SVGCircleElement;
    this.ball.setAttribute("class", "ball");
    this.svg.append(this.edgeLayer, this.nodeLayer, this.ball);
    this.writeBall(0, 0, 0);
  }

  /** Screen coordinates for a unit-circle position. */
  toScreen(x: number, y: number): { x: number; y: number } {
    return { x: this.cx + x * this.radius, y: this.cy - y * this.radius };
  }

  /** Adopt a new frame; the ball animates from wherever it is at `now`. */
  applyFrame(frame: MediatorFrame, now: number): void {
    this.fromBall = this.ballAt(now);
    this.animStart = now;
    this.frame = frame;
    this.renderAt(now);
  }

  /**
   * Participant churn between frames: place a joiner provisionally on the
   * circle (the next server frame owns the real layout), drop a leaver.
   */
  noteParticipant(ev: ParticipantEvent, now: number): void {
    if (!this.frame) return;
    let nodes = this.frame.nodes.filter((n) => n.participant !== ev.participant);
    if (ev.kind === "JOIN") {
      nodes = [...nodes, ...layoutCircle([ev.participant], nodes.length + 1, nodes.length)];
      const edges = { ...this.frame.edges, [ev.participant]: 0 };
      this.frame = { ...this.frame, nodes, edges };
    } else {
      this.frame = { ...this.frame, nodes };
    }
    this.renderAt(now);
  }

  /** Interpolated unit-circle ball position at an instant. */
  ballAt(now: number): { x: number; y: number } {
    if (!this.frame) return { x: 0, y: 0 };
    const t = Math.min(1, Math.max(0, (now - this.animStart) / ANIM_MS));
    return {
      x: this.fromBall.x + (this.frame.ball.x - this.fromBall.x) * t,
      y: this.fromBall.y + (this.frame.ball.y - this.fromBall.y) * t,
    };
  }

  /** Write the DOM for time `now`. Idempotent. */
  renderAt(now: number): void {
    const frame = this.frame;
    if (!frame) return;
    const seen = new Set<string>();
    for (const node of frame.nodes) {
      seen.add(node.participant);
      this.upsertNode(node, frame.edges[node.participant] ?? 0, now);
    }
    for (const [pid, parts] of [...this.parts]) {
      if (!seen.has(pid)) {
        parts.line.remove();
        parts.dot.remove();
        parts.label.remove();
        this.parts.delete(pid);
      }
    }
    const ball = this.ballAt(now);
    const screen = this.toScreen(ball.x, ball.y);
    this.writeBall(screen.x, screen.y, frame.ball.intensity);
    for (const node of frame.nodes) {
      const parts = this.parts.get(node.participant)!;
      parts.line.setAttribute("x2", String(screen.x));
      parts.line.setAttribute("y2", String(screen.y));
    }
  }

  nodeCount(): number {
    return this.parts.size;
  }

  private upsertNode(node: FrameNode, weight: number, now: number): void {
    let parts = this.parts.get(node.participant);
    if (!parts) {
      const line = this.doc.createElementNS(SVG_NS, "line") as SVGLineElement;
      line.setAttribute("stroke", "#9ccc9c");
      const dot = this.doc.createElementNS(SVG_NS, "circle") as SVGCircleElement;
      dot.setAttribute("class", "node");
      dot.setAttribute("r", String(this.render.nodeRadius));
      dot.setAttribute("fill", "#4877b8");
      const label = this.doc.createElementNS(SVG_NS, "text") as SVGTextElement;
      label.setAttribute("class", "label");
      label.setAttribute("text-anchor", "middle");
      parts = { line, dot, label };
      this.edgeLayer.append(line);
      this.nodeLayer.append(dot, label);
      this.parts.set(node.participant, parts);
    }
    const p = this.toScreen(node.x, node.y);
    parts.dot.setAttribute("data-participant", node.participant);
    parts.dot.setAttribute("cx", String(p.x));
    parts.dot.setAttribute("cy", String(p.y));
    parts.label.textContent = node.participant;
    parts.label.setAttribute("x", String(p.x));
    parts.label.setAttribute("y", String(p.y - this.render.nodeRadius - 6));
    const { minEdgeWidth, maxEdgeWidth } = this.render;
    const width = minEdgeWidth + (maxEdgeWidth - minEdgeWidth) * Math.min(1, Math.max(0, weight));
    parts.line.setAttribute("data-participant", node.participant);
    parts.line.setAttribute("stroke-width", width.toFixed(2));
    parts.line.setAttribute("x1", String(p.x));
    parts.line.setAttribute("y1", String(p.y));
  }

  private writeBall(x: number, y: number, intensity: number): void {
    const i = Math.min(1, Math.max(0, intensity));
    const { minBallRadius, maxBallRadius, ballHue } = this.render;
    this.ball.setAttribute("cx", String(x));
    this.ball.setAttribute("cy", String(y));
    this.ball.setAttribute("r", (minBallRadius + (maxBallRadius - minBallRadius) * i).toFixed(2));
    // Saturation and opacity ramp linearly with intensity.
    const saturation = Math.round(20 + 75 * i);
    const lightness = Math.round(80 - 45 * i);
    this.ball.setAttribute("fill", `hsl(${ballHue}, ${saturation}%, ${lightness}%)`);
    this.ball.setAttribute("fill-opacity", (0.35 + 0.65 * i).toFixed(3));
    this.ball.setAttribute("data-intensity", String(i));
  }
}

/**
 * Provisional circle spots for participants that joined since the last
 * frame: same convention as the server (first at the top, clockwise).
 */
export function layoutCircle(participants: string[], total: number, offset: number): FrameNode[] {
  return participants.map((pid, k) => {
    const angle = Math.PI / 2 - (2 * Math.PI * (offset + k)) / total;
    return { participant: pid, angle, x: Math.cos(angle), y: Math.sin(angle) };
  });
}
