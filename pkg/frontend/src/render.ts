// Imperative DOM layer. mountDashboard builds the page skeleton once and
// returns an update(state) that patches it; everything shown is derived
// from the folded DashState plus the small connection/interaction surface
// passed through the handle, so live and replayed logs render identically.

import { drawChart, latestValue } from "./charts";
import { drawScene } from "./scene";
import type { ConnectionPhase } from "./stream";
import type { DashState } from "./state";
import { COMMAND_LABELS, COMMAND_SYMBOLS } from "./types";
import type { CommandSymbol } from "./types";

export interface DashboardHandle {
  update(state: DashState): void;
  setConnection(phase: ConnectionPhase | "replay"): void;
  setPadBlocked(reason: string | null): void;
  toast(message: string): void;
  root: HTMLElement;
}

export interface Handlers {
  onCommand(symbol: CommandSymbol): void;
  onLogFile(text: string, name: string): void;
}

const CHART_DEFS = [
  { key: "bpm", title: "Heart rate", unit: "bpm", color: "#e5484d" },
  { key: "spo2", title: "SpO2", unit: "%", color: "#4a7dff" },
  { key: "ecg", title: "ECG", unit: "", color: "#2c9f6b" },
  { key: "tempF", title: "Body temp", unit: "°F", color: "#c8a000" },
] as const;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function fmtT(t: number): string {
  return `${t.toFixed(2)}s`;
}

export function mountDashboard(root: HTMLElement, handlers: Handlers): DashboardHandle {
  root.innerHTML = "";
  root.classList.add("dash");

  // --- header: title, connection badge, alert banner ---------------------
  const header = el("header");
  header.append(el("h1", {}, "wheelchair dashboard"));
  const connBadge = el("span", { id: "conn-badge", class: "badge" }, "connecting");
  header.append(connBadge);
  const meta = el("span", { id: "run-meta", class: "meta" }, "");
  header.append(meta);
  root.append(header);

  const alertBanner = el("div", { id: "alert-banner", class: "banner hidden" });
  root.append(alertBanner);
  const padBanner = el("div", { id: "pad-banner", class: "banner warn hidden" });
  root.append(padBanner);

  const grid = el("div", { class: "grid" });
  root.append(grid);

  // --- control column -----------------------------------------------------
  const controlCard = el("section", { class: "card" });
  controlCard.append(el("h2", {}, "Control"));
  const chipRow = el("div", { class: "chip-row" });
  const motorChip = el("span", { id: "motor-chip", class: "chip" }, "—");
  const overrideBadge = el(
    "span",
    { id: "override-badge", class: "badge danger hidden" },
    "OVERRIDE",
  );
  chipRow.append(motorChip, overrideBadge);
  controlCard.append(chipRow);

  const pad = el("div", { id: "pad", class: "pad" });
  // Buttons are the only path to the network; the symbol union keeps the
  // request alphabet closed.
  for (const symbol of COMMAND_SYMBOLS) {
    const button = el(
      "button",
      { "data-cmd": symbol, class: `pad-${symbol}` },
      COMMAND_LABELS[symbol],
    );
    button.addEventListener("click", () => handlers.onCommand(symbol));
    pad.append(button);
  }
  controlCard.append(pad);

  const distance = el("div", { id: "distance", class: "readout" }, "");
  controlCard.append(distance);

  const uploads = el("div", { id: "uploads", class: "readout" }, "");
  controlCard.append(uploads);

  const replayRow = el("div", { class: "replay-row" });
  const fileInput = el("input", { type: "file", id: "log-input", accept: ".jsonl" });
  fileInput.addEventListener("change", () => {
    const file = (fileInput as HTMLInputElement).files?.[0];
    if (!file) return;
    void file.text().then((text) => handlers.onLogFile(text, file.name));
  });
  replayRow.append(el("label", { for: "log-input" }, "replay a recorded log:"), fileInput);
  controlCard.append(replayRow);
  grid.append(controlCard);

  // --- scene column ---------------------------------------------------------
  const sceneCard = el("section", { class: "card" });
  sceneCard.append(el("h2", {}, "Scene"));
  const sceneCanvas = el("canvas", { id: "scene", width: "360", height: "360" });
  sceneCard.append(sceneCanvas);
  const ticker = el("ul", { id: "ticker", class: "ticker" });
  sceneCard.append(el("h3", {}, "Announcements"), ticker);
  grid.append(sceneCard);

  // --- vitals column ---------------------------------------------------------
  const vitalsCard = el("section", { class: "card" });
  vitalsCard.append(el("h2", {}, "Vitals"));
  const chartNodes = CHART_DEFS.map((def) => {
    const wrap = el("div", { class: "chart" });
    const head = el("div", { class: "chart-head" });
    head.append(el("span", {}, def.title));
    const value = el("span", { id: `value-${def.key}`, class: "chart-value" }, "—");
    head.append(value);
    const canvas = el("canvas", {
      id: `chart-${def.key}`,
      width: "320",
      height: "80",
    });
    wrap.append(head, canvas);
    vitalsCard.append(wrap);
    return { def, canvas, value };
  });
  grid.append(vitalsCard);

  // --- command log ------------------------------------------------------------
  const logCard = el("section", { class: "card" });
  logCard.append(el("h2", {}, "Commands"));
  const commandLog = el("ul", { id: "command-log", class: "ticker" });
  logCard.append(commandLog);
  grid.append(logCard);

  const toastHost = el("div", { id: "toasts", class: "toasts" });
  root.append(toastHost);

  // --- patching --------------------------------------------------------------

  function renderList(host: HTMLUListElement, entries: { t: number; text: string }[]) {
    host.innerHTML = "";
    for (const entry of entries) {
      const li = el("li");
      li.append(
        el("span", { class: "ts" }, fmtT(entry.t)),
        el("span", {}, entry.text),
      );
      host.append(li);
    }
  }

  function update(state: DashState): void {
    const chair = state.chair;
    motorChip.textContent = chair === null ? "—" : chair.motor;
    motorChip.className = `chip motor-${chair === null ? "none" : chair.motor.toLowerCase()}`;
    overrideBadge.classList.toggle("hidden", !(chair?.override ?? false));
    distance.textContent =
      chair === null ? "" : `obstacle ${chair.distance_cm.toFixed(1)} cm`;
    uploads.textContent =
      `uploads ${state.uploadCount}` +
      (state.alertCount > 0 ? ` · alerts ${state.alertCount}` : "");
    meta.textContent = `t=${fmtT(state.t)}`;

    const alert = state.alerts[state.alerts.length - 1];
    alertBanner.classList.toggle("hidden", alert === undefined);
    if (alert !== undefined) {
      alertBanner.textContent =
        `ALERT ${alert.trigger} = ${alert.value.toFixed(2)} at ${fmtT(alert.t)}` +
        (state.alertCount > 1 ? ` (${state.alertCount} total)` : "");
    }

    for (const { def, canvas, value } of chartNodes) {
      const series = state.vitals[def.key];
      drawChart(canvas, series, { color: def.color });
      const v = latestValue(series);
      value.textContent = v === null ? "—" : `${v.toFixed(1)}${def.unit}`;
    }

    drawScene(sceneCanvas, state);
    renderList(ticker, state.utterances);
    renderList(
      commandLog,
      state.commands.map((c) => ({ t: c.t, text: `${c.source}: ${c.command}` })),
    );
  }

  function setConnection(phase: ConnectionPhase | "replay"): void {
    connBadge.textContent = phase;
    connBadge.className = `badge conn-${phase}`;
  }

  function setPadBlocked(reason: string | null): void {
    for (const button of pad.querySelectorAll("button")) {
      button.disabled = reason !== null;
    }
    padBanner.classList.toggle("hidden", reason === null);
    padBanner.textContent = reason ?? "";
  }

  function toast(message: string): void {
    const node = el("div", { class: "toast" }, message);
    toastHost.append(node);
    setTimeout(() => node.remove(), 4000);
  }

  return { update, setConnection, setPadBlocked, toast, root };
}
