/** Typed client for the experiment service API. */

export interface SessionDescriptor {
  session_id: string;
  condition: "rooney" | "control";
  total_rounds: number;
  k: number;
  ell: number;
}

export interface RoundTile {
  id: number;
  color: "blue" | "red";
  observed: number;
  // latent values are never present on round tiles; they arrive only in
  // the reveal payload of a successful submit.
}

export interface RoundView {
  round_index: number;
  total_rounds: number;
  k: number;
  ell: number;
  condition: "rooney" | "control";
  tiles: RoundTile[];
  cumulative_points: number;
}

export interface RevealedTile {
  id: number;
  color: "blue" | "red";
  observed: number;
  latent: number;
}

export interface SubmitResult {
  round_index: number;
  revealed: RevealedTile[];
  round_score: number;
  cumulative_points: number;
  bonus_dollars: number;
  completed: boolean;
  next_round_index?: number;
}

export interface DemoTile {
  id: number;
  color: "red";
  observed: number;
  latent: number;
}

export interface DemoPayload {
  tiles: DemoTile[];
  select_count: number;
}

export type ErrorKind =
  | "count"
  | "constraint"
  | "duplicate"
  | "conflict"
  | "not-found"
  | "gone";

export class ApiError extends Error {
  constructor(
    public kind: ErrorKind,
    message: string,
    public status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(
  base: string,
  path: string,
  init?: RequestInit,
): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(body.kind ?? "count", body.message ?? "request failed", response.status);
  }
  return body as T;
}

export class ExperimentApi {
  constructor(private base: string = "") {}

  createSession(condition: "random" | "rooney" | "control"): Promise<SessionDescriptor> {
    return request(this.base, "/api/sessions", {
      method: "POST",
      body: JSON.stringify({ condition }),
    });
  }

  getRound(sessionId: string): Promise<RoundView> {
    return request(this.base, `/api/sessions/${sessionId}/round`);
  }

  submitSelection(
    sessionId: string,
    tileIds: number[],
    roundIndex?: number,
  ): Promise<SubmitResult> {
    const body: Record<string, unknown> = { tile_ids: tileIds };
    if (roundIndex !== undefined) body.round_index = roundIndex;
    return request(this.base, `/api/sessions/${sessionId}/selection`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getSummary(sessionId: string): Promise<unknown> {
    return request(this.base, `/api/sessions/${sessionId}/summary`);
  }

  getDemo(): Promise<DemoPayload> {
    return request(this.base, "/api/demo");
  }

  checkDemo(tileIds: number[]): Promise<{ passed: boolean }> {
    return request(this.base, "/api/demo/check", {
      method: "POST",
      body: JSON.stringify({ tile_ids: tileIds }),
    });
  }
}
