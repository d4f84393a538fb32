// DOM wiring for the login page.

import { ApiClient } from "./api.js";
import { MicrophoneSource } from "./capture.js";
import { LoginFlow } from "./flow.js";
import { userHint, ViewState } from "./state.js";

const PHASE_TEXT: Record<string, string> = {
  idle: "Enter your username and password.",
  recording: "Listening… keep the page open.",
  awaiting_verdict: "Comparing with your phone…",
  accepted: "Logged in ✓",
  rejected: "Login rejected.",
  fallback_code: "Enter the verification code from your phone.",
  throttled: "Too many attempts — try again in a minute.",
};

function element<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

let flow: LoginFlow | null = null;
let countdownTimer: number | undefined;

function render(state: ViewState): void {
  element<HTMLDivElement>("status").textContent =
    PHASE_TEXT[state.phase] ?? state.phase;
  const hint = userHint(state);
  const hintBox = element<HTMLDivElement>("hint");
  hintBox.textContent = hint ?? "";
  hintBox.style.display = hint ? "block" : "none";
  element<HTMLDivElement>("reason").textContent =
    state.reason && state.phase !== "accepted" ? `(${state.reason})` : "";
  element<HTMLFormElement>("login-form").style.display =
    state.phase === "idle" ? "block" : "none";
  element<HTMLDivElement>("fallback-box").style.display =
    state.phase === "fallback_code" ? "block" : "none";
  const meter = element<HTMLDivElement>("countdown");
  if (state.phase === "recording" && state.countdownMs > 0) {
    meter.style.display = "block";
    let remaining = state.countdownMs;
    window.clearInterval(countdownTimer);
    countdownTimer = window.setInterval(() => {
      remaining -= 100;
      meter.textContent = `recording… ${(remaining / 1000).toFixed(1)}s`;
      if (remaining <= 0) window.clearInterval(countdownTimer);
    }, 100);
  } else {
    window.clearInterval(countdownTimer);
    meter.style.display = "none";
  }
}

export function mount(): void {
  const api = new ApiClient("");
  element<HTMLFormElement>("login-form").addEventListener(
    "submit",
    async (event) => {
      event.preventDefault();
      const username = element<HTMLInputElement>("username").value;
      const password = element<HTMLInputElement>("password").value;
      flow = new LoginFlow(api, new MicrophoneSource(), {
        onState: render,
      });
      await flow.login(username, password);
    },
  );
  element<HTMLFormElement>("fallback-form").addEventListener(
    "submit",
    async (event) => {
      event.preventDefault();
      const code = element<HTMLInputElement>("code").value;
      await flow?.submitFallbackCode(code);
    },
  );
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", mount);
}
