// Orchestrates one login: password check, capture with concurrent clock
// sync, hybrid encryption, upload, verdict polling, retries, fallback.
// Plaintext PCM exists only inside this module; everything that leaves
// goes through hybridEncrypt first.

import { ApiClient, ApiError, Challenge } from "./api.js";
import {
  encodeSamplePayload,
  SampleSource,
  CaptureError,
} from "./capture.js";
import { hybridEncrypt, importPhoneKey } from "./cryptobox.js";
import { adjustTimestamp, estimateOffset } from "./sync.js";
import { initialState, reduce, ViewEvent, ViewState } from "./state.js";

export interface FlowOptions {
  deviceId?: string;
  syncRounds?: number;
  maxRounds?: number;
  resultWaitMs?: number;
  onState?: (state: ViewState) => void;
  now?: () => number;
}

export class LoginFlow {
  state: ViewState = { ...initialState };
  capturedDurationsMs: number[] = [];
  private sessionId: string | null = null;

  constructor(
    private api: ApiClient,
    private source: SampleSource,
    private options: FlowOptions = {},
  ) {}

  private dispatch(event: ViewEvent): ViewState {
    this.state = reduce(this.state, event);
    this.options.onState?.(this.state);
    return this.state;
  }

  async login(username: string, password: string): Promise<ViewState> {
    const now = this.options.now ?? Date.now;
    let challenge: Challenge;
    try {
      challenge = await this.api.loginInit(username, password);
    } catch (err) {
      return this.fail(err);
    }
    this.sessionId = challenge.session_id;
    const phoneKey = await importPhoneKey(challenge.phone_pubkey);
    const maxRounds = this.options.maxRounds ?? 4;

    for (let round = 0; round < maxRounds; round++) {
      this.dispatch({
        kind: "challenge",
        sessionId: challenge.session_id,
        recordMs: challenge.record_ms,
      });
      try {
        // clock sync runs while the microphone records
        const offsetPromise = estimateOffset(
          this.api,
          this.options.syncRounds ?? 4,
          now,
        );
        const startedAt = now();
        const pcm = await this.source.record(challenge.record_ms);
        const offset = await offsetPromise;
        this.capturedDurationsMs.push(
          (pcm.length / this.source.sampleRate) * 1000,
        );
        const payload = encodeSamplePayload(
          pcm,
          this.source.sampleRate,
          adjustTimestamp(startedAt, offset),
          this.options.deviceId ?? "browser",
        );
        const encrypted = await hybridEncrypt(phoneKey, payload);
        await this.api.uploadSample(challenge.session_id, encrypted);
        this.dispatch({ kind: "uploaded" });

        const result = await this.api.result(
          challenge.session_id,
          "AWAITING_VERDICT",
          this.options.resultWaitMs ?? 15_000,
        );
        const state = this.dispatch({
          kind: "result",
          state: result.state,
          reason: result.reason,
          attemptCount: result.attempt_count,
          retryLimit: result.retry_limit,
        });
        if (state.phase !== "recording") return state;
      } catch (err) {
        return this.fail(err);
      }
    }
    return this.state;
  }

  async submitFallbackCode(code: string): Promise<ViewState> {
    if (!this.sessionId) throw new Error("no login in progress");
    try {
      const result = await this.api.fallback(this.sessionId, code);
      return this.dispatch({
        kind: "result",
        state: result.state,
        reason: result.reason,
        attemptCount: result.attempt_count,
        retryLimit: result.retry_limit,
      });
    } catch (err) {
      return this.fail(err);
    }
  }

  private fail(err: unknown): ViewState {
    if (err instanceof ApiError) {
      return this.dispatch({
        kind: "error",
        code: err.code,
        detail: err.detail,
      });
    }
    if (err instanceof CaptureError) {
      return this.dispatch({ kind: "error", code: err.code });
    }
    return this.dispatch({ kind: "error", code: "NETWORK_FAIL", detail: String(err) });
  }
}
