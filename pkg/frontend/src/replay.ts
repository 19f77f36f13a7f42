// Rebuild dashboard state from a recorded event log (the JSONL file
// `wheelsim run` writes). Because rendering is a pure function of the
// folded state, this reproduces the final live view of that run.

import { applyRaw, initialState } from "./state";
import type { DashState } from "./state";

export interface ReplayResult {
  state: DashState;
  lines: number;
  badLines: number;
}

export function foldLog(text: string): ReplayResult {
  let state = initialState();
  let lines = 0;
  let badLines = 0;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (trimmed === "") continue;
    lines++;
    let raw: unknown;
    try {
      raw = JSON.parse(trimmed);
    } catch {
      badLines++;
      continue;
    }
    state = applyRaw(state, raw);
  }
  return { state, lines, badLines };
}
