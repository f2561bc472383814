/** Typed client for the dialogue gateway. Mirrors docs/api.md: JSON over
 * HTTP with idempotency tokens on every mutating call, plus an event feed
 * that prefers the WebSocket channel and falls back to polling the JSON
 * twin when no WebSocket implementation is available. */

export interface MoveWire {
  kind: string;
  content?: string[];
  target?: number | null;
  prompt_targets?: number[];
}

export interface LocutionWire {
  id: number;
  turn: number;
  speaker: string;
  kind: string;
  content: string[];
  target: number | null;
  prompt_targets: number[];
}

export interface ObligationWire {
  debtor: string;
  request: number;
}

export interface ChallengeWire {
  formula: string;
  challenged_by: string;
  via: number;
}

export interface Snapshot {
  session: string;
  stage: string;
  participants: { name: string; role: string }[];
  min_participants: number;
  turn_order: string;
  current_speaker: string | null;
  turn_count: number;
  closed: boolean;
  last_seq: number;
  history: LocutionWire[];
  commitments: Record<string, string[]>;
  agreements: string[];
  consented: string[];
  open_obligations: ObligationWire[];
  prompt_pending: number[];
  unresolved_challenges: ChallengeWire[];
}

export interface ReplyChoice {
  kind: string;
  label: string;
}

export interface RepliesPayload {
  target: number;
  kind: string;
  replies: ReplyChoice[];
}

export interface Violation {
  code: string;
  message: string;
  move_index: number | null;
}

export type TurnResult =
  | { accepted: true; snapshot: Snapshot }
  | { accepted: false; violations: Violation[] };

export interface EventWire {
  seq: number;
  session: string;
  kind: string;
  payload: Record<string, unknown>;
  ts: number;
}

export class GatewayError extends Error {
  constructor(
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

function freshToken(): string {
  return crypto.randomUUID();
}

export class Gateway {
  constructor(readonly baseUrl: string) {}

  private async request(path: string, init?: RequestInit): Promise<any> {
    const response = await fetch(this.baseUrl + path, init);
    let payload: any = null;
    try {
      payload = await response.json();
    } catch {
      throw new GatewayError("TRANSPORT", `${path}: status ${response.status}, no JSON body`);
    }
    if (payload && typeof payload === "object" && payload.error) {
      throw new GatewayError(payload.error.code ?? "UNKNOWN", payload.error.message ?? "");
    }
    return payload;
  }

  private post(path: string, body: Record<string, unknown>): Promise<any> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createSession(config: Record<string, unknown>, token = freshToken()): Promise<string> {
    const payload = await this.post("/sessions", { config, token });
    return payload.session;
  }

  async join(
    sid: string,
    displayName: string,
    role = "participant",
    token = freshToken(),
  ): Promise<{ participant: string; position: number; started: boolean }> {
    return this.post(`/sessions/${sid}/join`, { display_name: displayName, role, token });
  }

  async submitTurn(
    sid: string,
    speaker: string,
    moves: MoveWire[],
    token = freshToken(),
  ): Promise<TurnResult> {
    return this.post(`/sessions/${sid}/turns`, { speaker, moves, token });
  }

  async snapshot(sid: string): Promise<Snapshot> {
    return this.request(`/sessions/${sid}/snapshot`);
  }

  async replies(sid: string, target: number): Promise<RepliesPayload> {
    return this.request(`/sessions/${sid}/replies?target=${target}`);
  }

  async labels(): Promise<Record<string, string>> {
    return this.request("/labels");
  }

  async events(sid: string, after = -1): Promise<EventWire[]> {
    const payload = await this.request(`/sessions/${sid}/events.json?after=${after}`);
    return payload.events;
  }

  async health(): Promise<boolean> {
    const payload = await this.request("/health");
    return payload.ok === true;
  }
}

export interface Subscription {
  close(): void;
}

export interface SubscribeOptions {
  after?: number;
  /** WebSocket constructor; defaults to the global one when present. */
  webSocket?: typeof WebSocket;
  /** Poll interval for the fallback, in milliseconds. */
  pollMs?: number;
  onError?: (err: unknown) => void;
}

/** Follow a session's event feed until it closes or the subscription is
 * cancelled. Events arrive in seq order with no gaps. */
export function subscribeEvents(
  gateway: Gateway,
  sid: string,
  onEvent: (event: EventWire) => void,
  options: SubscribeOptions = {},
): Subscription {
  const WS = options.webSocket ?? (globalThis as { WebSocket?: typeof WebSocket }).WebSocket;
  let last = options.after ?? -1;

  if (WS) {
    const wsBase = gateway.baseUrl.replace(/^http/, "ws");
    const socket = new WS(`${wsBase}/sessions/${sid}/events?after=${last}`);
    socket.onmessage = (message: MessageEvent) => {
      const event = JSON.parse(String(message.data));
      if (event.error) {
        options.onError?.(new GatewayError(event.error.code, event.error.message));
        socket.close();
        return;
      }
      last = event.seq;
      onEvent(event);
    };
    if (options.onError) socket.onerror = options.onError;
    return { close: () => socket.close() };
  }

  let stopped = false;
  let inFlight = false;
  const timer = setInterval(async () => {
    if (stopped || inFlight) return;
    inFlight = true;
    try {
      for (const event of await gateway.events(sid, last)) {
        if (stopped) return;
        last = event.seq;
        onEvent(event);
        if (event.kind === "Closed") {
          stopped = true;
          clearInterval(timer);
        }
      }
    } catch (err) {
      options.onError?.(err);
    } finally {
      inFlight = false;
    }
  }, options.pollMs ?? 250);
  return {
    close: () => {
      stopped = true;
      clearInterval(timer);
    },
  };
}
