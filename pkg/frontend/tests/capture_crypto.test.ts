import { describe, expect, it } from "vitest";

import {
  downmix,
  encodeSamplePayload,
  FixtureSource,
  framesFor,
} from "../src/capture.js";
import {
  fromBase64,
  hybridEncrypt,
  importPhoneKey,
  toBase64,
} from "../src/cryptobox.js";

describe("capture", () => {
  it("fixture source yields exactly the requested duration", async () => {
    const source = new FixtureSource(new Float32Array(200_000), 48_000);
    const pcm = await source.record(3000);
    expect(pcm.length).toBe(framesFor(3000, 48_000));
    expect((pcm.length / 48_000) * 1000).toBeCloseTo(3000, 1);
  });

  it("short fixtures are zero-padded to the duration", async () => {
    const source = new FixtureSource(new Float32Array([0.5, 0.5]), 1000);
    const pcm = await source.record(10);
    expect(pcm.length).toBe(10);
    expect(pcm[0]).toBe(0.5);
    expect(pcm[9]).toBe(0);
  });

  it("downmix averages channels", () => {
    const mono = downmix([
      new Float32Array([1, 1]),
      new Float32Array([0, -1]),
    ]);
    expect(Array.from(mono)).toEqual([0.5, 0]);
  });

  it("payload carries int16 PCM with full-scale clipping", () => {
    const payload = encodeSamplePayload(
      new Float32Array([0, 0.5, 1.0, -1.0]),
      44100,
      123456,
      "browser",
    );
    const body = JSON.parse(new TextDecoder().decode(payload));
    expect(body.fs).toBe(44100);
    expect(body.captured_at).toBe(123456);
    expect(body.device_id).toBe("browser");
    const ints = new Int16Array(fromBase64(body.pcm).buffer);
    expect(Array.from(ints)).toEqual([0, 16384, 32767, -32768]);
  });
});

describe("hybrid encryption", () => {
  it("round-trips through RSA-OAEP + AES-GCM", async () => {
    const pair = await crypto.subtle.generateKey(
      {
        name: "RSA-OAEP",
        modulusLength: 2048,
        publicExponent: new Uint8Array([1, 0, 1]),
        hash: "SHA-256",
      },
      true,
      ["encrypt", "decrypt"],
    );
    const spki = new Uint8Array(
      await crypto.subtle.exportKey("spki", pair.publicKey),
    );
    const phoneKey = await importPhoneKey(toBase64(spki));

    const payload = new TextEncoder().encode("covert payload");
    const sample = await hybridEncrypt(phoneKey, payload);

    // the recipient unwraps the AES key, then opens the ciphertext
    const rawAes = await crypto.subtle.decrypt(
      { name: "RSA-OAEP" },
      pair.privateKey,
      fromBase64(sample.wrapped_key).buffer as ArrayBuffer,
    );
    const aesKey = await crypto.subtle.importKey(
      "raw",
      rawAes,
      "AES-GCM",
      false,
      ["decrypt"],
    );
    const plain = await crypto.subtle.decrypt(
      { name: "AES-GCM", iv: fromBase64(sample.nonce).buffer as ArrayBuffer },
      aesKey,
      fromBase64(sample.ciphertext).buffer as ArrayBuffer,
    );
    expect(new TextDecoder().decode(plain)).toBe("covert payload");
    expect(fromBase64(sample.nonce).length).toBe(12);
    expect(fromBase64(sample.wrapped_key).length).toBe(256);
  });

  it("fresh AES key per call", async () => {
    const pair = await crypto.subtle.generateKey(
      {
        name: "RSA-OAEP",
        modulusLength: 2048,
        publicExponent: new Uint8Array([1, 0, 1]),
        hash: "SHA-256",
      },
      true,
      ["encrypt", "decrypt"],
    );
    const spki = new Uint8Array(
      await crypto.subtle.exportKey("spki", pair.publicKey),
    );
    const key = await importPhoneKey(toBase64(spki));
    const payload = new Uint8Array(64);
    const a = await hybridEncrypt(key, payload);
    const b = await hybridEncrypt(key, payload);
    expect(a.ciphertext).not.toBe(b.ciphertext);
    expect(a.wrapped_key).not.toBe(b.wrapped_key);
  });

  it("base64 helpers handle large buffers", () => {
    const big = new Uint8Array(500_000).map((_, i) => i % 251);
    const round = fromBase64(toBase64(big));
    expect(round.length).toBe(big.length);
    expect(round[123_456]).toBe(big[123_456]);
  });
});
