// Top-down scene view. The stream carries no world geometry, so the view
// draws exactly what the chair knows: its own pose trail, the ultrasonic
// reading along the heading, and detection markers recovered from the
// published box encoding (cy encodes distance, cx encodes bearing, both
// at the stock 60 degree / 5 m camera).

import type { DashState, Marker } from "./state";

export const SCENE_FOV_RAD = (60 * Math.PI) / 180;
export const SCENE_RANGE_M = 5;

export interface WorldPos {
  x: number;
  y: number;
  label: string;
}

export function markerWorldPos(
  marker: Marker,
  pose: { x: number; y: number; heading: number },
  fovRad = SCENE_FOV_RAD,
  rangeM = SCENE_RANGE_M,
): WorldPos {
  const [cx, cy] = marker.box;
  const bearing = (0.5 - cx) * fovRad;
  const distance = Math.max(0, (0.75 - cy) * 2 * rangeM);
  const angle = pose.heading + bearing;
  return {
    x: pose.x + distance * Math.cos(angle),
    y: pose.y + distance * Math.sin(angle),
    label: marker.label,
  };
}

export function ultrasonicHit(
  pose: { x: number; y: number; heading: number },
  distanceCm: number,
  maxRangeCm = 400,
): { x: number; y: number } | null {
  if (distanceCm >= maxRangeCm) return null;
  const d = distanceCm / 100;
  return {
    x: pose.x + d * Math.cos(pose.heading),
    y: pose.y + d * Math.sin(pose.heading),
  };
}

// World y points up on screen: a left turn (heading increasing) reads as
// counterclockwise, matching the math convention.
function makeTransform(
  canvas: { width: number; height: number },
  center: { x: number; y: number },
  metersAcross: number,
) {
  const scale = Math.min(canvas.width, canvas.height) / metersAcross;
  return (x: number, y: number): [number, number] => [
    canvas.width / 2 + (x - center.x) * scale,
    canvas.height / 2 - (y - center.y) * scale,
  ];
}

export function drawScene(canvas: HTMLCanvasElement, state: DashState): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const chair = state.chair;
  if (chair === null) {
    ctx.fillStyle = "#888";
    ctx.font = "13px sans-serif";
    ctx.fillText("waiting for telemetry", 12, 24);
    return;
  }
  const toPx = makeTransform(canvas, chair, 8);

  // grid, 1 m pitch around the chair
  ctx.strokeStyle = "rgba(128,128,128,0.15)";
  ctx.lineWidth = 1;
  for (let gx = Math.floor(chair.x - 4); gx <= chair.x + 4; gx++) {
    ctx.beginPath();
    ctx.moveTo(...toPx(gx, chair.y - 4));
    ctx.lineTo(...toPx(gx, chair.y + 4));
    ctx.stroke();
  }
  for (let gy = Math.floor(chair.y - 4); gy <= chair.y + 4; gy++) {
    ctx.beginPath();
    ctx.moveTo(...toPx(chair.x - 4, gy));
    ctx.lineTo(...toPx(chair.x + 4, gy));
    ctx.stroke();
  }

  // trail
  if (state.trail.length > 1) {
    ctx.strokeStyle = "rgba(80,140,255,0.6)";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(...toPx(state.trail[0]!.x, state.trail[0]!.y));
    for (const p of state.trail) ctx.lineTo(...toPx(p.x, p.y));
    ctx.stroke();
  }

  // ultrasonic ray and hit mark
  const hit = ultrasonicHit(chair, chair.distance_cm);
  if (hit !== null) {
    ctx.strokeStyle = chair.override ? "#e5484d" : "rgba(200,160,0,0.8)";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(...toPx(chair.x, chair.y));
    ctx.lineTo(...toPx(hit.x, hit.y));
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(...toPx(hit.x, hit.y), 4, 0, Math.PI * 2);
    ctx.fillStyle = chair.override ? "#e5484d" : "#c8a000";
    ctx.fill();
  }

  // detection markers still inside their TTL
  ctx.font = "11px sans-serif";
  for (const m of state.markers) {
    const pos = markerWorldPos(m, chair);
    const [px, py] = toPx(pos.x, pos.y);
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, Math.PI * 2);
    ctx.strokeStyle = "#2c9f6b";
    ctx.lineWidth = 2;
    ctx.stroke();
    ctx.fillStyle = "#2c9f6b";
    ctx.fillText(m.label, px + 7, py + 4);
  }

  // the chair itself as a heading triangle
  const [cx0, cy0] = toPx(chair.x, chair.y);
  const a = chair.heading;
  const size = 10;
  ctx.beginPath();
  ctx.moveTo(
    cx0 + size * Math.cos(a) * 1.4,
    cy0 - size * Math.sin(a) * 1.4,
  );
  ctx.lineTo(
    cx0 + size * Math.cos(a + (Math.PI * 3) / 4),
    cy0 - size * Math.sin(a + (Math.PI * 3) / 4),
  );
  ctx.lineTo(
    cx0 + size * Math.cos(a - (Math.PI * 3) / 4),
    cy0 - size * Math.sin(a - (Math.PI * 3) / 4),
  );
  ctx.closePath();
  ctx.fillStyle = chair.override ? "#e5484d" : "#4a7dff";
  ctx.fill();
}
