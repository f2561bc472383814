import { inject } from "vitest";
import { Gateway, type MoveWire, type Snapshot } from "../src/api.js";
import wireScript from "./fixtures/table4.wire.json";

export interface WireTurn {
  label: string;
  speaker: string;
  moves: MoveWire[];
}

export const script = wireScript as {
  participants: { name: string; role: string }[];
  config: Record<string, unknown>;
  turns: WireTurn[];
};

export function gateway(): Gateway {
  return new Gateway(inject("baseUrl"));
}

/** Create a session from the worked-dialogue fixture and join everyone. */
export async function openScriptSession(gw: Gateway): Promise<string> {
  const sid = await gw.createSession(script.config);
  for (const entry of script.participants) {
    await gw.join(sid, entry.name, entry.role);
  }
  return sid;
}

/** Submit fixture turns from `fromLabel` (exclusive, "" for the start)
 * through `toLabel` (inclusive); every one must be accepted. */
export async function playThrough(
  gw: Gateway,
  sid: string,
  toLabel: string,
  fromLabel = "",
): Promise<Snapshot> {
  let playing = fromLabel === "";
  let snapshot: Snapshot | null = null;
  for (const turn of script.turns) {
    if (!playing) {
      if (turn.label === fromLabel) playing = true;
      continue;
    }
    const result = await gw.submitTurn(sid, turn.speaker, turn.moves);
    if (!result.accepted) {
      const detail = result.violations.map((v) => `${v.code}: ${v.message}`).join("; ");
      throw new Error(`${turn.label} rejected: ${detail}`);
    }
    snapshot = result.snapshot;
    if (turn.label === toLabel) break;
  }
  if (snapshot === null) throw new Error(`no turns played up to ${toLabel}`);
  return snapshot;
}

/** Deterministic PRNG so sampled locutions are stable across runs. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function sample<T>(items: T[], count: number, rand: () => number): T[] {
  const pool = [...items];
  const picked: T[] = [];
  while (picked.length < count && pool.length > 0) {
    const index = Math.floor(rand() * pool.length);
    picked.push(pool.splice(index, 1)[0] as T);
  }
  return picked;
}
