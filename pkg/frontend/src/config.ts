/** Client configuration from URL parameters plus render defaults. */

export interface RenderConfig {
  /** Hue of the center ball's green ramp (degrees). */
  ballHue: number;
  minBallRadius: number;
  maxBallRadius: number;
  minEdgeWidth: number;
  maxEdgeWidth: number;
  nodeRadius: number;
}

export interface ClientConfig {
  serverUrl: string;
  sessionId: string;
  token: string;
  debug: boolean;
  render: RenderConfig;
}

export const DEFAULT_RENDER: RenderConfig = {
  ballHue: 123,
  minBallRadius: 10,
  maxBallRadius: 36,
  minEdgeWidth: 1,
  maxEdgeWidth: 10,
  nodeRadius: 14,
};

export function validateRender(r: RenderConfig): string[] {
  const errors: string[] = [];
  const positive: Array<[string, number]> = [
    ["minBallRadius", r.minBallRadius],
    ["maxBallRadius", r.maxBallRadius],
    ["minEdgeWidth", r.minEdgeWidth],
    ["maxEdgeWidth", r.maxEdgeWidth],
    ["nodeRadius", r.nodeRadius],
  ];
  for (const [name, value] of positive) {
    if (!(value > 0)) errors.push(`${name} must be positive`);
  }
  if (!(r.minBallRadius < r.maxBallRadius)) errors.push("minBallRadius must be < maxBallRadius");
  if (!(r.minEdgeWidth < r.maxEdgeWidth)) errors.push("minEdgeWidth must be < maxEdgeWidth");
  return errors;
}

/** Parse `?server=&session=&token=&debug=1`; returns an error string when incomplete. */
export function configFromSearch(search: string): ClientConfig | string {
  const params = new URLSearchParams(search);
  const server = params.get("server");
  const session = params.get("session");
  const token = params.get("token");
  if (!server || !session || !token) {
    return "missing required URL parameters: server, session, token";
  }
  return {
    serverUrl: server,
    sessionId: session,
    token,
    debug: params.get("debug") === "1",
    render: { ...DEFAULT_RENDER },
  };
}

/** Websocket URL for the session's envelope stream. */
export function streamUrl(cfg: ClientConfig): string {
  const base = cfg.serverUrl.replace(/^http(s?):\/\//, "ws$1://").replace(/\/+$/, "");
  const prefix = /^wss?:\/\//.test(base) ? base : `ws://${base}`;
  return `${prefix}/v1/sessions/${cfg.sessionId}/stream?token=${encodeURIComponent(cfg.token)}`;
}
