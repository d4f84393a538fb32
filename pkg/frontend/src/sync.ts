// Clock-offset estimation against the server: NTP-style timestamp rounds
// over the sync endpoint, keeping the round with the lowest round-trip
// time. Runs concurrently with recording.

import type { ApiClient } from "./api.js";

export interface ClockOffset {
  offsetMs: number;
  rttMs: number;
  roundsUsed: number;
}

export async function estimateOffset(
  api: ApiClient,
  rounds = 4,
  now: () => number = Date.now,
): Promise<ClockOffset> {
  let best: ClockOffset | null = null;
  for (let i = 0; i < rounds; i++) {
    const t1 = now();
    const { t2, t3 } = await api.sync(t1);
    const t4 = now();
    const rttMs = t4 - t1 - (t3 - t2);
    const offsetMs = (t2 - t1 + (t3 - t4)) / 2;
    if (best === null || rttMs < best.rttMs) {
      best = { offsetMs, rttMs, roundsUsed: rounds };
    }
  }
  return best!;
}

export function adjustTimestamp(localMs: number, offset: ClockOffset): number {
  return Math.round(localMs + offset.offsetMs);
}
