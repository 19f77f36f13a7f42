import type { CommandSymbol } from "./types";

export interface StatusSnapshot {
  t: number;
  scenario: string;
  seed: number;
  chair: {
    x: number;
    y: number;
    heading: number;
    motor: string;
    last_command: string;
    distance_cm: number;
    override: boolean;
  };
  vitals: {
    bpm: number | null;
    spo2: number | null;
    ecg: number;
    objectTempF: number;
    ambientTempC: number;
    leadStatus: number;
  } | null;
  alerts: { temperature_latched: boolean; spo2_latched: boolean; count: number };
  uploads: number;
}

export type CommandResult =
  | { ok: true; command: string }
  | { ok: false; reason: "offline" | "rejected" | "network"; detail: string };

export async function fetchStatus(
  fetchFn: typeof fetch = fetch,
): Promise<StatusSnapshot | null> {
  try {
    const res = await fetchFn("/api/status");
    if (!res.ok) return null;
    return (await res.json()) as StatusSnapshot;
  } catch {
    return null;
  }
}

/** POST one command symbol. The symbol type is the whole UI-side
 * guarantee that nothing outside the alphabet can ever be sent. */
export async function postCommand(
  symbol: CommandSymbol,
  fetchFn: typeof fetch = fetch,
): Promise<CommandResult> {
  let res: Response;
  try {
    res = await fetchFn("/api/command", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ command: symbol }),
    });
  } catch (err) {
    return { ok: false, reason: "network", detail: String(err) };
  }
  if (res.status === 503) {
    return { ok: false, reason: "offline", detail: "simulation not running" };
  }
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const body = (await res.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    return { ok: false, reason: "rejected", detail };
  }
  const body = (await res.json()) as { command: string };
  return { ok: true, command: body.command };
}
