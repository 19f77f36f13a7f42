// Dashboard state as a pure fold over the telemetry stream. Rendering
// reads this and nothing else, so replaying a recorded log through
// reduce() reproduces exactly what a live session would have shown.

import { parseEvent } from "./types";
import type {
  AlertEvent,
  ChairEvent,
  DetectionBox,
  TelemetryEvent,
} from "./types";

export const CHART_WINDOW_S = 60;
export const TRAIL_WINDOW_S = 60;
export const DETECTION_TTL_S = 2;
export const TICKER_LIMIT = 50;

export interface SeriesPoint {
  t: number;
  v: number | null; // null renders as a gap, never as zero
}

export interface Marker {
  t: number;
  label: string;
  confidence: number;
  box: [number, number, number, number];
}

export interface TickerEntry {
  t: number;
  text: string;
}

export interface CommandEntry {
  t: number;
  source: string;
  command: string;
}

export interface AlertBanner {
  t: number;
  trigger: string;
  value: number;
}

export interface DashState {
  t: number; // latest event time seen
  chair: ChairEvent | null;
  vitals: {
    bpm: SeriesPoint[];
    spo2: SeriesPoint[];
    ecg: SeriesPoint[];
    tempF: SeriesPoint[];
  };
  trail: { t: number; x: number; y: number }[];
  markers: Marker[];
  utterances: TickerEntry[];
  commands: CommandEntry[];
  alerts: AlertBanner[];
  alertCount: number;
  uploadCount: number;
  lastUploadQuery: string | null;
  eventsApplied: number;
  eventsIgnored: number;
}

export function initialState(): DashState {
  return {
    t: 0,
    chair: null,
    vitals: { bpm: [], spo2: [], ecg: [], tempF: [] },
    trail: [],
    markers: [],
    utterances: [],
    commands: [],
    alerts: [],
    alertCount: 0,
    uploadCount: 0,
    lastUploadQuery: null,
    eventsApplied: 0,
    eventsIgnored: 0,
  };
}

// Append honoring the rolling window. Re-delivered points (t not past the
// series head) are dropped, so an overlapping reconnect never duplicates.
function pushPoint(
  series: SeriesPoint[],
  t: number,
  v: number | null,
): SeriesPoint[] {
  const last = series[series.length - 1];
  if (last !== undefined && t <= last.t) return series;
  const out = series.concat({ t, v });
  const cutoff = t - CHART_WINDOW_S;
  let start = 0;
  while (start < out.length && out[start]!.t < cutoff) start++;
  return start > 0 ? out.slice(start) : out;
}

function applyChair(state: DashState, e: ChairEvent): DashState {
  const prev = state.trail[state.trail.length - 1];
  let trail = state.trail;
  if (prev === undefined || e.t > prev.t) {
    trail = trail.concat({ t: e.t, x: e.x, y: e.y });
    const cutoff = e.t - TRAIL_WINDOW_S;
    let start = 0;
    while (start < trail.length && trail[start]!.t < cutoff) start++;
    if (start > 0) trail = trail.slice(start);
  }
  return { ...state, chair: e, trail };
}

function applyAlert(state: DashState, e: AlertEvent): DashState {
  // Alert timestamps are unique per run; an already-seen one is a replayed
  // frame, not a second alert.
  if (state.alerts.some((a) => a.t === e.t && a.trigger === e.trigger)) {
    return state;
  }
  return {
    ...state,
    alerts: state.alerts.concat({ t: e.t, trigger: e.trigger, value: e.value }),
    alertCount: state.alertCount + 1,
  };
}

function markersAfter(
  markers: Marker[],
  t: number,
  fresh: { t: number; boxes: DetectionBox[] } | null,
): Marker[] {
  const alive = markers.filter((m) => t - m.t < DETECTION_TTL_S);
  if (fresh === null) return alive;
  const added = fresh.boxes.map((d) => ({
    t: fresh.t,
    label: d.label,
    confidence: d.confidence,
    box: d.box,
  }));
  return alive.concat(added);
}

export function reduce(state: DashState, event: TelemetryEvent): DashState {
  const t = Math.max(state.t, event.t);
  switch (event.kind) {
    case "chair":
      return { ...applyChair(state, event), t, eventsApplied: state.eventsApplied + 1 };
    case "vitals":
      return {
        ...state,
        t,
        vitals: {
          bpm: pushPoint(state.vitals.bpm, event.t, event.bpm),
          spo2: pushPoint(state.vitals.spo2, event.t, event.spo2),
          ecg: pushPoint(state.vitals.ecg, event.t, event.ecg),
          tempF: pushPoint(state.vitals.tempF, event.t, event.objectTempF),
        },
        eventsApplied: state.eventsApplied + 1,
      };
    case "detection": {
      const dup = state.markers.some((m) => m.t === event.t);
      return {
        ...state,
        t,
        markers: markersAfter(
          state.markers,
          event.t,
          dup ? null : { t: event.t, boxes: event.detections },
        ),
        eventsApplied: state.eventsApplied + 1,
      };
    }
    case "utterance": {
      const dup = state.utterances.some(
        (u) => u.t === event.t && u.text === event.text,
      );
      if (dup) return { ...state, t, eventsApplied: state.eventsApplied + 1 };
      const utterances = [{ t: event.t, text: event.text }, ...state.utterances]
        .slice(0, TICKER_LIMIT);
      return { ...state, t, utterances, eventsApplied: state.eventsApplied + 1 };
    }
    case "alert":
      return { ...applyAlert(state, event), t, eventsApplied: state.eventsApplied + 1 };
    case "upload":
      if (event.entry_id <= state.uploadCount) {
        return { ...state, t, eventsApplied: state.eventsApplied + 1 };
      }
      return {
        ...state,
        t,
        uploadCount: event.entry_id,
        lastUploadQuery: event.query,
        eventsApplied: state.eventsApplied + 1,
      };
    case "command": {
      const commands = [
        { t: event.t, source: event.source, command: event.command },
        ...state.commands,
      ].slice(0, TICKER_LIMIT);
      return { ...state, t, commands, eventsApplied: state.eventsApplied + 1 };
    }
  }
}

/** Fold a raw decoded object: known events reduce, everything else counts
 * as ignored (lifecycle frames, malformed objects, future kinds). */
export function applyRaw(state: DashState, raw: unknown): DashState {
  const parsed = parseEvent(raw);
  if (parsed === null) {
    return { ...state, eventsIgnored: state.eventsIgnored + 1 };
  }
  return reduce(state, parsed);
}
