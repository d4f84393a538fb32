// Full-stack test: this client against the real server and phone-token
// processes, with fixture audio injected on both sides. Verifies the
// page-level outcome, that no plaintext PCM ever leaves the client, and
// the capture-duration contract.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { FixtureSource } from "../src/capture.js";
import { fromBase64 } from "../src/cryptobox.js";
import { LoginFlow } from "../src/flow.js";

const PYTHON = process.env.PYTHON ?? "python3";

const FIXTURE_SCRIPT = `
import sys
import numpy as np
from ambientauth.audio import AudioSample, encode_wav, resample
from ambientauth.harness.synth import ambient_track

out = sys.argv[1]
rng = np.random.default_rng(909)
fs = 44100
n = 4 * fs
lag = round(0.05 * fs)
track = ambient_track(rng, n + lag, fs)
noise = 0.1 * 10 ** (-20 / 20)
phone = AudioSample.from_pcm(track[:n] + noise * rng.standard_normal(n), fs)
computer = AudioSample.from_pcm(
    track[lag:lag + n] + noise * rng.standard_normal(n), fs)
with open(out + "/phone.wav", "wb") as fh:
    fh.write(encode_wav(phone))
# browser records at its own device rate; 48 kHz exercises phone-side
# resampling
browser = resample(computer, 48000)
browser.pcm.astype("<f4").tofile(out + "/browser.f32")
print("fixtures-ready")
`;

let workDir: string;
let serverProc: ChildProcess;
let tokenProc: ChildProcess;
let httpPort = 0;

function waitForLine(
  proc: ChildProcess,
  pattern: RegExp,
  label: string,
): Promise<RegExpMatchArray> {
  return new Promise((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(
      () => reject(new Error(`timeout waiting for ${label}: ${buffer}`)),
      60_000,
    );
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(pattern);
      if (match) {
        clearTimeout(timer);
        resolve(match);
      }
    };
    proc.stdout?.on("data", onData);
    proc.stderr?.on("data", onData);
  });
}

function runPython(args: string[]): Promise<void> {
  return new Promise((resolve, reject) => {
    const proc = spawn(PYTHON, args, { stdio: ["ignore", "pipe", "pipe"] });
    let output = "";
    proc.stdout.on("data", (chunk) => (output += chunk));
    proc.stderr.on("data", (chunk) => (output += chunk));
    proc.on("exit", (code) =>
      code === 0
        ? resolve()
        : reject(new Error(`python exited ${code}: ${output}`)),
    );
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "ambientauth-e2e-"));
  const fixtureScript = join(workDir, "make_fixtures.py");
  writeFileSync(fixtureScript, FIXTURE_SCRIPT);
  await runPython([fixtureScript, workDir]);

  serverProc = spawn(
    PYTHON,
    [
      "-u",
      "-m",
      "ambientauth.server",
      "--http-port",
      "0",
      "--channel-port",
      "0",
      "--db",
      join(workDir, "server.db"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const ports = await waitForLine(
    serverProc,
    /http[=:]\s?[\d.]+:(\d+)\s+(?:device )?channel[=:]\s?[\d.]+:(\d+)/,
    "server ports",
  );
  httpPort = Number(ports[1]);
  const channelPort = Number(ports[2]);

  const creds = join(workDir, "creds.json");
  writeFileSync(creds, JSON.stringify({ username: "webuser", password: "pw" }));
  tokenProc = spawn(
    PYTHON,
    [
      "-u",
      "-m",
      "ambientauth.token",
      "--server",
      "127.0.0.1",
      "--http-port",
      String(httpPort),
      "--channel-port",
      String(channelPort),
      "--credentials",
      creds,
      "--keyfile",
      join(workDir, "device.pem"),
      "--enroll",
      "--fixture",
      join(workDir, "phone.wav"),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForLine(tokenProc, /token connected/, "token readiness");
});

afterAll(() => {
  tokenProc?.kill();
  serverProc?.kill();
});

function loadBrowserFixture(): FixtureSource {
  const raw = readFileSync(join(workDir, "browser.f32"));
  const pcm = new Float32Array(
    raw.buffer,
    raw.byteOffset,
    raw.byteLength / 4,
  );
  return new FixtureSource(new Float32Array(pcm), 48_000);
}

describe("browser login against the live stack", () => {
  it("reaches accepted without leaking plaintext audio", async () => {
    const requestBodies: string[] = [];
    const interceptingFetch: typeof fetch = (input, init) => {
      if (init?.body) requestBodies.push(String(init.body));
      return fetch(input, init);
    };
    const api = new ApiClient(
      `http://127.0.0.1:${httpPort}`,
      interceptingFetch,
    );
    const source = loadBrowserFixture();
    const phases: string[] = [];
    const flow = new LoginFlow(api, source, {
      onState: (state) => phases.push(state.phase),
    });

    const finalState = await flow.login("webuser", "pw");
    expect(finalState.phase).toBe("accepted");
    expect(phases).toContain("recording");
    expect(phases).toContain("awaiting_verdict");

    // duration contract: 3000 ms ± 50 ms of audio was recorded
    expect(flow.capturedDurationsMs).toHaveLength(1);
    expect(Math.abs(flow.capturedDurationsMs[0] - 3000)).toBeLessThanOrEqual(
      50,
    );

    // plaintext PCM never leaves the page: the int16 rendering of the
    // recording must not appear in any outbound payload, base64 fields
    // included
    const pcm = await source.record(3000);
    const ints = new Int16Array(pcm.length);
    for (let i = 0; i < pcm.length; i++) {
      const scaled = Math.round(pcm[i] * 32768);
      ints[i] = Math.max(-32768, Math.min(32767, scaled));
    }
    const marker = Buffer.from(ints.buffer, 0, 4000);
    expect(requestBodies.length).toBeGreaterThan(0);
    for (const body of requestBodies) {
      expect(Buffer.from(body).includes(marker)).toBe(false);
      let parsed: Record<string, unknown>;
      try {
        parsed = JSON.parse(body);
      } catch {
        continue;
      }
      for (const value of Object.values(parsed)) {
        if (typeof value !== "string" || value.length < 500) continue;
        let decoded: Uint8Array;
        try {
          decoded = fromBase64(value);
        } catch {
          continue;
        }
        expect(Buffer.from(decoded).includes(marker)).toBe(false);
      }
    }
  });

  it("wrong password surfaces a credentials error without recording", async () => {
    const api = new ApiClient(`http://127.0.0.1:${httpPort}`);
    const source = loadBrowserFixture();
    const flow = new LoginFlow(api, source);
    const finalState = await flow.login("webuser", "wrong-password");
    expect(finalState.phase).toBe("idle");
    expect(finalState.reason).toContain("BAD_CREDENTIALS");
    expect(flow.capturedDurationsMs).toHaveLength(0);
  });
});
