// Login view state machine. Phases mirror the server-side session states
// one-to-one, plus the local `recording` phase while the microphone runs.

export type Phase =
  | "idle"
  | "recording"
  | "awaiting_verdict"
  | "accepted"
  | "rejected"
  | "fallback_code"
  | "throttled";

export interface ViewState {
  phase: Phase;
  sessionId: string | null;
  countdownMs: number;
  reason: string | null;
  attemptCount: number;
  retryLimit: number;
}

export type ViewEvent =
  | { kind: "challenge"; sessionId: string; recordMs: number }
  | { kind: "countdown"; remainingMs: number }
  | { kind: "uploaded" }
  | {
      kind: "result";
      state: string;
      reason: string | null;
      attemptCount?: number;
      retryLimit?: number;
    }
  | { kind: "error"; code: string; detail?: string }
  | { kind: "reset" };

export const initialState: ViewState = {
  phase: "idle",
  sessionId: null,
  countdownMs: 0,
  reason: null,
  attemptCount: 0,
  retryLimit: 0,
};

const SERVER_STATE_TO_PHASE: Record<string, Phase> = {
  AWAITING_SAMPLES: "recording", // server wants another recording
  ACCEPTED: "accepted",
  REJECTED: "rejected",
  FALLBACK_CODE: "fallback_code",
};

export function reduce(state: ViewState, event: ViewEvent): ViewState {
  switch (event.kind) {
    case "challenge":
      return {
        ...state,
        phase: "recording",
        sessionId: event.sessionId,
        countdownMs: event.recordMs,
        reason: null,
      };
    case "countdown":
      return { ...state, countdownMs: Math.max(0, event.remainingMs) };
    case "uploaded":
      return { ...state, phase: "awaiting_verdict", countdownMs: 0 };
    case "result": {
      const phase = SERVER_STATE_TO_PHASE[event.state];
      if (!phase) {
        // AWAITING_VERDICT (long-poll timeout) keeps the current phase
        return { ...state, reason: event.reason ?? state.reason };
      }
      return {
        ...state,
        phase,
        reason: event.reason,
        attemptCount: event.attemptCount ?? state.attemptCount,
        retryLimit: event.retryLimit ?? state.retryLimit,
      };
    }
    case "error":
      if (event.code === "THROTTLED") {
        return { ...state, phase: "throttled", reason: event.code };
      }
      if (event.code === "BAD_CODE") {
        // inline error; the fallback prompt stays up
        return { ...state, phase: "fallback_code", reason: event.code };
      }
      return {
        ...state,
        phase: "idle",
        reason: event.detail ? `${event.code}: ${event.detail}` : event.code,
      };
    case "reset":
      return { ...initialState };
  }
}

// The quiet-environment hint: when a recording was rejected for lack of
// acoustic energy the user can fix it themselves.
export function userHint(state: ViewState): string | null {
  if (state.reason === "PHONE_TOO_QUIET" || state.reason === "COMPUTER_TOO_QUIET") {
    return "Too quiet — make any noise (clear your throat, tap the desk) and try again.";
  }
  if (state.phase === "fallback_code") {
    return "Audio verification did not go through; enter the code from your phone app.";
  }
  if (state.phase === "throttled") {
    return "Too many attempts; wait a minute before retrying.";
  }
  return null;
}
