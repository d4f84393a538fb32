// Audio capture. The microphone path records through getUserMedia at the
// device rate and downmixes to mono; a fixture source substitutes raw PCM
// for tests and headless runs. Either way the caller gets exactly the
// requested duration.

import { toBase64 } from "./cryptobox.js";

export interface SampleSource {
  readonly sampleRate: number;
  record(ms: number): Promise<Float32Array>;
}

export class CaptureError extends Error {
  constructor(public code: string, message?: string) {
    super(message ?? code);
  }
}

export function framesFor(ms: number, sampleRate: number): number {
  return Math.round((ms / 1000) * sampleRate);
}

export function fitToLength(pcm: Float32Array, frames: number): Float32Array {
  if (pcm.length === frames) return pcm;
  const out = new Float32Array(frames);
  out.set(pcm.subarray(0, Math.min(frames, pcm.length)));
  return out;
}

export function downmix(channels: Float32Array[]): Float32Array {
  if (channels.length === 1) return channels[0];
  const n = Math.min(...channels.map((c) => c.length));
  const out = new Float32Array(n);
  for (const channel of channels) {
    for (let i = 0; i < n; i++) out[i] += channel[i] / channels.length;
  }
  return out;
}

export class FixtureSource implements SampleSource {
  constructor(
    private pcm: Float32Array,
    public readonly sampleRate: number,
  ) {}

  async record(ms: number): Promise<Float32Array> {
    return fitToLength(this.pcm, framesFor(ms, this.sampleRate));
  }
}

export class MicrophoneSource implements SampleSource {
  sampleRate = 0; // known after the first getUserMedia

  async record(ms: number): Promise<Float32Array> {
    let stream: MediaStream;
    try {
      stream = await navigator.mediaDevices.getUserMedia({
        audio: { echoCancellation: false, noiseSuppression: false },
      });
    } catch (err) {
      const name = (err as DOMException)?.name;
      if (name === "NotAllowedError" || name === "SecurityError") {
        throw new CaptureError("PERMISSION_DENIED");
      }
      throw new CaptureError("MIC_UNAVAILABLE", String(err));
    }
    try {
      const context = new AudioContext();
      this.sampleRate = context.sampleRate;
      const frames = framesFor(ms, context.sampleRate);
      const chunks: Float32Array[] = [];
      let collected = 0;
      const node = context.createScriptProcessor(4096, 2, 1);
      const source = context.createMediaStreamSource(stream);
      const done = new Promise<void>((resolve) => {
        node.onaudioprocess = (event) => {
          const inputs: Float32Array[] = [];
          for (let c = 0; c < event.inputBuffer.numberOfChannels; c++) {
            inputs.push(new Float32Array(event.inputBuffer.getChannelData(c)));
          }
          const mono = downmix(inputs);
          chunks.push(mono);
          collected += mono.length;
          if (collected >= frames) resolve();
        };
      });
      source.connect(node);
      node.connect(context.destination);
      await done;
      node.disconnect();
      source.disconnect();
      await context.close();
      const all = new Float32Array(collected);
      let offset = 0;
      for (const chunk of chunks) {
        all.set(chunk, offset);
        offset += chunk.length;
      }
      return fitToLength(all, frames);
    } finally {
      stream.getTracks().forEach((track) => track.stop());
    }
  }
}

// Serialize a recording the way the phone expects it: 16-bit little-endian
// PCM (full-scale 32768, clipped at 32767) plus capture metadata, as JSON.
export function encodeSamplePayload(
  pcm: Float32Array,
  sampleRate: number,
  capturedAt: number,
  deviceId: string,
): Uint8Array {
  const ints = new Int16Array(pcm.length);
  for (let i = 0; i < pcm.length; i++) {
    const scaled = Math.round(pcm[i] * 32768);
    ints[i] = Math.max(-32768, Math.min(32767, scaled));
  }
  const body = JSON.stringify({
    pcm: toBase64(new Uint8Array(ints.buffer)),
    fs: sampleRate,
    captured_at: capturedAt,
    device_id: deviceId,
  });
  return new TextEncoder().encode(body);
}
