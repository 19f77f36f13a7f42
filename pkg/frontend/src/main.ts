import { fetchStatus } from "./api";
import { makeCommandHandler } from "./controller";
import { foldLog } from "./replay";
import { mountDashboard } from "./render";
import { applyRaw, initialState } from "./state";
import { createStore } from "./store";
import { connectStream, streamUrl } from "./stream";
import "./style.css";

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app element");

const store = createStore(initialState(), applyRaw);
let replaying = false;

const dash = mountDashboard(root, {
  onCommand(symbol) {
    void sendCommand(symbol);
  },
  onLogFile(text, name) {
    replaying = true;
    stream.close();
    const { state, lines, badLines } = foldLog(text);
    dash.setConnection("replay");
    dash.setPadBlocked(`replaying ${name}`);
    dash.update(state);
    dash.toast(`replayed ${lines} lines (${badLines} bad) from ${name}`);
  },
});

const sendCommand = makeCommandHandler(dash);

// rAF-throttled rendering: many stream events per frame, one paint
let dirty = false;
store.subscribe(() => {
  if (dirty) return;
  dirty = true;
  requestAnimationFrame(() => {
    dirty = false;
    if (!replaying) dash.update(store.getState());
  });
});
dash.update(store.getState());

const stream = connectStream(
  streamUrl(window.location),
  (raw) => {
    if (!replaying) store.dispatch(raw);
  },
  (phase) => {
    if (replaying) return;
    dash.setConnection(phase);
    if (phase === "live") {
      // resync the pad banner: the sim may have appeared since the last try
      void fetchStatus().then((snapshot) => {
        dash.setPadBlocked(snapshot === null ? "simulation not running" : null);
      });
    }
  },
);

void fetchStatus().then((snapshot) => {
  dash.setPadBlocked(snapshot === null ? "simulation not running" : null);
});
