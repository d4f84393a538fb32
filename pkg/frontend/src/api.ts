// Typed HTTP client for the login endpoints. The fetch implementation is
// injectable so tests can intercept and inspect every outbound payload.

import type { EncryptedSample } from "./cryptobox.js";

export interface Challenge {
  session_id: string;
  phone_pubkey: string;
  record_ms: number;
}

export interface ResultMessage {
  state: string;
  reason: string | null;
  attempt_count: number;
  retry_limit: number;
}

export class ApiError extends Error {
  constructor(public code: string, public detail: string) {
    super(`${code}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    const body = await response.json();
    if (!response.ok || body.type === "ERROR") {
      throw new ApiError(body.error ?? "ERROR", body.detail ?? "");
    }
    return body as T;
  }

  loginInit(username: string, password: string): Promise<Challenge> {
    return this.post("/api/login_init", {
      type: "LOGIN_INIT",
      username,
      password,
    });
  }

  async sync(t1: number): Promise<{ t2: number; t3: number }> {
    const body = await this.post<{ t2: number; t3: number }>("/api/sync", {
      type: "SYNC_REQ",
      t1,
    });
    return { t2: body.t2, t3: body.t3 };
  }

  uploadSample(sessionId: string, sample: EncryptedSample): Promise<unknown> {
    return this.post("/api/sample", {
      type: "SAMPLE_UPLOAD",
      session_id: sessionId,
      ...sample,
    });
  }

  async result(
    sessionId: string,
    waitWhile?: string,
    waitMs = 0,
  ): Promise<ResultMessage> {
    const params = new URLSearchParams({ session_id: sessionId });
    if (waitWhile) {
      params.set("wait_while", waitWhile);
      params.set("wait_ms", String(waitMs));
    }
    const response = await this.fetchFn(
      `${this.baseUrl}/api/result?${params.toString()}`,
    );
    const body = await response.json();
    if (!response.ok || body.type === "ERROR") {
      throw new ApiError(body.error ?? "ERROR", body.detail ?? "");
    }
    return body as ResultMessage;
  }

  fallback(sessionId: string, code: string): Promise<ResultMessage> {
    return this.post("/api/fallback", {
      type: "FALLBACK_CODE",
      session_id: sessionId,
      code,
    });
  }
}
