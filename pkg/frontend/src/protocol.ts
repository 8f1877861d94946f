/**
 * Wire types for the `breakout.v1` websocket stream and REST payloads.
 * Field names mirror the server's JSON schema bit-exactly.
 */

export interface FrameNode {
  participant: string;
  angle: number;
  x: number;
  y: number;
}

export interface Ball {
  x: number;
  y: number;
  intensity: number;
}

export interface MediatorFrame {
  session: string;
  tick: number;
  nodes: FrameNode[];
  ball: Ball;
  edges: Record<string, number>;
}

export interface TransitionMatrix {
  participants: string[];
  counts: number[][];
  probabilities: number[][];
}

export interface IntervalStats {
  session: string;
  tick: number;
  window: [number, number];
  speaking_events: Record<string, number>;
  speaking_time_ms: Record<string, number>;
  turns: Record<string, number>;
  transitions: TransitionMatrix;
  turn_taking_per_min: number;
  overlap_pct: number;
  participants_present: string[];
}

export interface ParticipantEvent {
  participant: string;
  t: number;
  kind: "JOIN" | "LEAVE";
}

export type StreamEnvelope =
  | { type: "stats"; session: string; seq: number; payload: IntervalStats }
  | { type: "frame"; session: string; seq: number; payload: MediatorFrame }
  | { type: "participant_event"; session: string; seq: number; payload: ParticipantEvent };

export const SUBPROTOCOL = "breakout.v1";
