// Thin client over the session wire API.

import type { CreateRequest, MovePayload, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function unwrap(response: Response): Promise<SessionView> {
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(body.error ?? response.statusText, response.status);
  }
  return body as SessionView;
}

export class SessionApi {
  constructor(readonly baseUrl: string) {}

  async createSession(req: CreateRequest): Promise<SessionView> {
    return unwrap(await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    }));
  }

  async getState(id: string): Promise<SessionView> {
    return unwrap(await fetch(`${this.baseUrl}/sessions/${id}`));
  }

  async submitMove(id: string, move: MovePayload): Promise<SessionView> {
    return unwrap(await fetch(`${this.baseUrl}/sessions/${id}/moves`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(move),
    }));
  }

  async getTrace(id: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/sessions/${id}/trace`);
    if (!response.ok) {
      throw new ApiError(response.statusText, response.status);
    }
    return response.text();
  }
}
