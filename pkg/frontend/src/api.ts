/**
 * Typed client for the session-service HTTP endpoints. The editor talks to
 * the service exclusively through this module.
 */

import type {
  EditEvent,
  SessionExport,
  SessionState,
  SuggestionKind,
  SuggestionPreview,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Network-level failure (service unreachable), distinct from an API error. */
export class ServiceUnreachable extends Error {}

type FetchLike = typeof fetch;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? globalThis.fetch.bind(globalThis);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? {} : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnreachable(String(err));
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  createSession(config: Record<string, unknown> = {}): Promise<{
    session_id: string;
    config: SessionState["config"];
  }> {
    return this.request("POST", "/sessions", config);
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  postEvents(sessionId: string, events: EditEvent[]): Promise<{ ack_seq: number }> {
    return this.request("POST", `/sessions/${sessionId}/events`, { events });
  }

  requestSuggestion(
    sessionId: string,
    kind: SuggestionKind,
    caret: number,
  ): Promise<SuggestionPreview> {
    return this.request("POST", `/sessions/${sessionId}/suggestions`, { kind, caret });
  }

  acceptSuggestion(
    sessionId: string,
    suggestionId: string,
    position: number,
  ): Promise<{ seq: number; text: string }> {
    return this.request(
      "POST",
      `/sessions/${sessionId}/suggestions/${suggestionId}/accept`,
      { position },
    );
  }

  save(sessionId: string): Promise<{ saved_at_ms: number; seq: number }> {
    return this.request("POST", `/sessions/${sessionId}/save`);
  }

  exportSession(sessionId: string): Promise<SessionExport> {
    return this.request("GET", `/sessions/${sessionId}/export`);
  }
}
