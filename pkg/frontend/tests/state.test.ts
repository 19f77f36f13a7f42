import { describe, expect, it } from "vitest";

import {
  CHART_WINDOW_S,
  DETECTION_TTL_S,
  TICKER_LIMIT,
  applyRaw,
  initialState,
  reduce,
} from "../src/state";
import type { DashState } from "../src/state";
import type {
  AlertEvent,
  ChairEvent,
  DetectionEvent,
  TelemetryEvent,
  VitalsEvent,
} from "../src/types";

function chairEvent(over: Partial<ChairEvent> = {}): ChairEvent {
  return {
    kind: "chair",
    t: 0.1,
    x: 0,
    y: 0,
    heading: 0,
    motor: "Stop",
    last_command: "S",
    distance_cm: 400,
    override: false,
    ...over,
  };
}

function vitalsEvent(over: Partial<VitalsEvent> = {}): VitalsEvent {
  return {
    kind: "vitals",
    t: 0.01,
    bpm: null,
    spo2: null,
    ecg: 512,
    objectTempF: 98.6,
    ambientTempC: 25,
    leadStatus: 0,
    ...over,
  };
}

function alertEvent(over: Partial<AlertEvent> = {}): AlertEvent {
  return {
    kind: "alert",
    t: 19.4,
    trigger: "objectTempF",
    value: 100.004,
    delivered: true,
    email_file: "alert_0001.txt",
    ...over,
  };
}

function deepFreeze<T>(value: T): T {
  if (typeof value === "object" && value !== null) {
    Object.freeze(value);
    for (const v of Object.values(value)) deepFreeze(v);
  }
  return value;
}

describe("reduce", () => {
  it("never mutates its input state", () => {
    let state = deepFreeze(initialState());
    const events: TelemetryEvent[] = [
      vitalsEvent({ t: 0.01, bpm: 72 }),
      chairEvent({ t: 0.1, motor: "Forward" }),
      alertEvent(),
      { kind: "utterance", t: 0.2, text: "Person" },
      { kind: "command", t: 0.2, source: "glove", command: "F" },
      { kind: "upload", t: 0, entry_id: 1, query: "api_key=K" },
    ];
    for (const e of events) {
      state = deepFreeze(reduce(state, e)); // throws in strict mode on mutation
    }
    expect(state.eventsApplied).toBe(events.length);
  });

  it("chair event updates motor, pose trail and override flag", () => {
    let s = initialState();
    s = reduce(s, chairEvent({ t: 0.1, motor: "Forward", x: 0.05 }));
    s = reduce(s, chairEvent({ t: 0.2, motor: "Stop", x: 0.05, distance_cm: 18, override: true }));
    expect(s.chair?.motor).toBe("Stop");
    expect(s.chair?.override).toBe(true);
    expect(s.trail.map((p) => p.t)).toEqual([0.1, 0.2]);
  });

  it("one chair event is enough to flip the rendered motor state", () => {
    const s = reduce(initialState(), chairEvent({ motor: "Forward" }));
    expect(s.chair?.motor).toBe("Forward");
  });

  it("null vitals become gap points, never zeros", () => {
    const s = reduce(initialState(), vitalsEvent({ bpm: null, spo2: null }));
    expect(s.vitals.bpm).toEqual([{ t: 0.01, v: null }]);
    expect(s.vitals.spo2).toEqual([{ t: 0.01, v: null }]);
    expect(s.vitals.ecg).toEqual([{ t: 0.01, v: 512 }]);
  });

  it("series drop points older than the rolling window", () => {
    let s = initialState();
    for (let i = 0; i <= 700; i++) {
      s = reduce(s, vitalsEvent({ t: i * 0.2, bpm: 72 }));
    }
    const first = s.vitals.bpm[0]!;
    const last = s.vitals.bpm[s.vitals.bpm.length - 1]!;
    expect(last.t - first.t).toBeLessThanOrEqual(CHART_WINDOW_S);
    expect(last.t).toBe(140);
  });

  it("re-delivered vitals after a reconnect do not duplicate points", () => {
    let s = initialState();
    const a = vitalsEvent({ t: 0.01, bpm: 70 });
    const b = vitalsEvent({ t: 0.02, bpm: 71 });
    s = reduce(s, a);
    s = reduce(s, b);
    s = reduce(s, a); // overlap replay
    s = reduce(s, b);
    expect(s.vitals.bpm.map((p) => p.t)).toEqual([0.01, 0.02]);
  });

  it("an alert is banner-worthy exactly once per timestamp", () => {
    let s = initialState();
    s = reduce(s, alertEvent());
    s = reduce(s, alertEvent()); // replayed frame
    expect(s.alertCount).toBe(1);
    expect(s.alerts).toHaveLength(1);
    expect(s.alerts[0]).toMatchObject({ trigger: "objectTempF", t: 19.4 });
    s = reduce(s, alertEvent({ t: 42.0, trigger: "spo2", value: 88 }));
    expect(s.alertCount).toBe(2);
  });

  it("detections expire after their TTL", () => {
    const det: DetectionEvent = {
      kind: "detection",
      t: 1.0,
      frame_id: 5,
      detections: [
        { label: "Person", confidence: 0.9, box: [0.5, 0.6, 0.1, 0.14] },
      ],
    };
    let s = reduce(initialState(), det);
    expect(s.markers).toHaveLength(1);
    s = reduce(s, {
      kind: "detection",
      t: 1.0 + DETECTION_TTL_S + 0.2,
      frame_id: 6,
      detections: [],
    });
    expect(s.markers).toHaveLength(0);
  });

  it("utterance ticker prepends with timestamp and stays bounded", () => {
    let s = initialState();
    for (let i = 0; i < TICKER_LIMIT + 10; i++) {
      s = reduce(s, { kind: "utterance", t: i * 0.5, text: `obj${i}` });
    }
    expect(s.utterances).toHaveLength(TICKER_LIMIT);
    expect(s.utterances[0]!.text).toBe(`obj${TICKER_LIMIT + 9}`);
    expect(s.utterances[0]!.t).toBeCloseTo((TICKER_LIMIT + 9) * 0.5);
  });

  it("upload count follows the stub entry id and keeps the last query", () => {
    let s = initialState();
    s = reduce(s, { kind: "upload", t: 0, entry_id: 1, query: "api_key=K&field1=" });
    s = reduce(s, { kind: "upload", t: 10, entry_id: 2, query: "api_key=K&field1=72" });
    s = reduce(s, { kind: "upload", t: 10, entry_id: 2, query: "api_key=K&field1=72" });
    expect(s.uploadCount).toBe(2);
    expect(s.lastUploadQuery).toContain("field1=72");
  });
});

describe("applyRaw", () => {
  it("ignores lifecycle frames and unknown kinds without failing", () => {
    let s: DashState = initialState();
    s = applyRaw(s, { t: 0, kind: "lifecycle", phase: "run_started" });
    s = applyRaw(s, { t: 1, kind: "someday-new-kind", payload: 1 });
    s = applyRaw(s, "not even an object");
    s = applyRaw(s, { kind: "chair" }); // malformed: missing fields
    expect(s.eventsIgnored).toBe(4);
    expect(s.eventsApplied).toBe(0);
    expect(s.chair).toBeNull();
  });

  it("applies well-formed stream objects", () => {
    const s = applyRaw(
      initialState(),
      JSON.parse(
        '{"t":0.1,"kind":"chair","x":0.0,"y":0.0,"heading":0.0,' +
          '"motor":"Forward","last_command":"F","distance_cm":125.0,"override":false}',
      ),
    );
    expect(s.eventsApplied).toBe(1);
    expect(s.chair?.motor).toBe("Forward");
  });
});
