// One websocket subscription to /api/stream with capped-backoff reconnect.
// Dropped frames between sessions are lost by design; the reducer's
// monotonic-time guards make any overlap harmless.

export type ConnectionPhase = "connecting" | "live" | "stale";

export interface StreamHandle {
  close(): void;
}

export function streamUrl(loc: { protocol: string; host: string }): string {
  const proto = loc.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${loc.host}/api/stream`;
}

export function connectStream(
  url: string,
  onEvent: (raw: unknown) => void,
  onPhase: (phase: ConnectionPhase) => void,
  wsFactory: (url: string) => WebSocket = (u) => new WebSocket(u),
): StreamHandle {
  let closed = false;
  let ws: WebSocket | null = null;
  let retryMs = 500;

  const open = () => {
    if (closed) return;
    onPhase("connecting");
    ws = wsFactory(url);
    ws.onopen = () => {
      retryMs = 500;
      onPhase("live");
    };
    ws.onmessage = (ev) => {
      if (typeof ev.data !== "string") return;
      try {
        onEvent(JSON.parse(ev.data));
      } catch {
        // a torn frame is dropped, not fatal
      }
    };
    ws.onclose = () => {
      ws = null;
      if (closed) return;
      onPhase("stale");
      setTimeout(open, retryMs);
      retryMs = Math.min(retryMs * 2, 8000);
    };
    ws.onerror = () => {
      // onclose follows and owns the retry
    };
  };

  open();
  return {
    close() {
      closed = true;
      ws?.close();
    },
  };
}
