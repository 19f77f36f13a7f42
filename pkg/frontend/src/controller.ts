// Control-pad behavior, shared by the app wiring and the DOM tests:
// post the symbol, block the pad when the sim is gone, toast transient
// failures. Failed commands are never queued or retried.

import { postCommand } from "./api";
import type { CommandSymbol } from "./types";

export interface PadSurface {
  setPadBlocked(reason: string | null): void;
  toast(message: string): void;
}

export function makeCommandHandler(
  surface: PadSurface,
  fetchFn: typeof fetch = fetch,
): (symbol: CommandSymbol) => Promise<void> {
  return async (symbol) => {
    const result = await postCommand(symbol, fetchFn);
    if (result.ok) return;
    if (result.reason === "offline") {
      surface.setPadBlocked("simulation not running");
    } else {
      surface.toast(`command failed: ${result.detail}`);
    }
  };
}
