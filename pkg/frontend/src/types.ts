// Telemetry event shapes as published on WS /api/stream (one JSON object
// per frame, identical to the recorded event-log lines).

export type CommandSymbol = "F" | "B" | "L" | "R" | "S";

export const COMMAND_SYMBOLS: readonly CommandSymbol[] = ["F", "B", "L", "R", "S"];

export const COMMAND_LABELS: Record<CommandSymbol, string> = {
  F: "Forward",
  B: "Backward",
  L: "Left",
  R: "Right",
  S: "Stop",
};

export interface ChairEvent {
  kind: "chair";
  t: number;
  x: number;
  y: number;
  heading: number;
  motor: string;
  last_command: string;
  distance_cm: number;
  override: boolean;
}

export interface VitalsEvent {
  kind: "vitals";
  t: number;
  bpm: number | null;
  spo2: number | null;
  ecg: number;
  objectTempF: number;
  ambientTempC: number;
  leadStatus: number;
}

export interface DetectionBox {
  label: string;
  confidence: number;
  box: [number, number, number, number]; // cx, cy, w, h in image fractions
}

export interface DetectionEvent {
  kind: "detection";
  t: number;
  frame_id: number;
  detections: DetectionBox[];
}

export interface UtteranceEvent {
  kind: "utterance";
  t: number;
  text: string;
}

export interface AlertEvent {
  kind: "alert";
  t: number;
  trigger: string;
  value: number;
  delivered: boolean;
  email_file: string | null;
}

export interface UploadEvent {
  kind: "upload";
  t: number;
  entry_id: number;
  query: string;
}

export interface CommandEvent {
  kind: "command";
  t: number;
  source: string;
  command: string;
}

export type TelemetryEvent =
  | ChairEvent
  | VitalsEvent
  | DetectionEvent
  | UtteranceEvent
  | AlertEvent
  | UploadEvent
  | CommandEvent;

const isNum = (v: unknown): v is number => typeof v === "number" && Number.isFinite(v);
const isNumOrNull = (v: unknown): v is number | null => v === null || isNum(v);
const isStr = (v: unknown): v is string => typeof v === "string";

function isBox(v: unknown): v is DetectionBox {
  if (typeof v !== "object" || v === null) return false;
  const d = v as Record<string, unknown>;
  return (
    isStr(d.label) &&
    isNum(d.confidence) &&
    Array.isArray(d.box) &&
    d.box.length === 4 &&
    d.box.every(isNum)
  );
}

/** Validate one decoded stream object against the published schema.
 *
 * Returns null for anything that is not a well-formed event of a known
 * kind. Unknown kinds (lifecycle phases and whatever a future server may
 * add) are dropped here, never thrown on.
 */
export function parseEvent(raw: unknown): TelemetryEvent | null {
  if (typeof raw !== "object" || raw === null) return null;
  const e = raw as Record<string, unknown>;
  if (!isNum(e.t)) return null;
  switch (e.kind) {
    case "chair":
      return isNum(e.x) && isNum(e.y) && isNum(e.heading) && isStr(e.motor) &&
        isStr(e.last_command) && isNum(e.distance_cm) &&
        typeof e.override === "boolean"
        ? (e as unknown as ChairEvent)
        : null;
    case "vitals":
      return isNumOrNull(e.bpm) && isNumOrNull(e.spo2) && isNum(e.ecg) &&
        isNum(e.objectTempF) && isNum(e.ambientTempC) && isNum(e.leadStatus)
        ? (e as unknown as VitalsEvent)
        : null;
    case "detection":
      return isNum(e.frame_id) && Array.isArray(e.detections) &&
        e.detections.every(isBox)
        ? (e as unknown as DetectionEvent)
        : null;
    case "utterance":
      return isStr(e.text) ? (e as unknown as UtteranceEvent) : null;
    case "alert":
      return isStr(e.trigger) && isNum(e.value) &&
        typeof e.delivered === "boolean"
        ? (e as unknown as AlertEvent)
        : null;
    case "upload":
      return isNum(e.entry_id) && isStr(e.query)
        ? (e as unknown as UploadEvent)
        : null;
    case "command":
      return isStr(e.source) && isStr(e.command)
        ? (e as unknown as CommandEvent)
        : null;
    default:
      return null;
  }
}

/** Parse one line of a JSONL stream; null on JSON errors too. */
export function parseEventLine(line: string): TelemetryEvent | null {
  const trimmed = line.trim();
  if (trimmed === "") return null;
  try {
    return parseEvent(JSON.parse(trimmed));
  } catch {
    return null;
  }
}
