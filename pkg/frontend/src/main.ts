// Console wiring: connect to a session, fold its event stream into the
// view model, render on animation frames, and send drag/click gestures
// back as perturbations.

import { ServiceClient } from "./api.js";
import { gestureToMutation } from "./gestures.js";
import { CANVAS_H, CANVAS_W } from "./layout.js";
import { ViewModel, applyEvent, applySnapshot, connectTo, initialViewModel, perturbationsEnabled } from "./model.js";
import { drawScene } from "./scene.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const canvas = $("scene") as unknown as HTMLCanvasElement;
canvas.width = CANVAS_W;
canvas.height = CANVAS_H;
const ctx = canvas.getContext("2d")!;

let vm: ViewModel = initialViewModel();
let client = new ServiceClient("http://127.0.0.1:8741");
let closeStream: (() => void) | null = null;
let dirty = true;
let dragging: { name: string; x: number; y: number } | null = null;
let retryTimer: number | null = null;

function setVm(next: ViewModel) {
  vm = next;
  dirty = true;
}

function render() {
  if (dirty) {
    dirty = false;
    drawScene(ctx, vm.state, dragging?.name ?? null);
    $("ticker").textContent = vm.ticker.join(" ");
    $("queue").textContent = vm.queue.length ? `queue: ${vm.queue.join(" ")}` : "queue: (empty)";
    $("status").textContent = `${vm.status}  tick ${vm.tick}  events ${vm.eventCount}  mispredictions ${vm.mispredictions}`;
    const banner = $("banner");
    banner.textContent = vm.banner ?? "";
    banner.className = vm.banner ? "banner visible" : "banner";
  }
  requestAnimationFrame(render);
}

function subscribe(sessionId: string) {
  if (closeStream) closeStream();
  closeStream = client.events(
    sessionId,
    (event) => setVm(applyEvent(vm, event)),
    () => {
      if (vm.status === "finished") {
        closeStream?.();
        return;
      }
      setVm({ ...vm, status: "error", banner: "connection lost, retrying..." });
      if (retryTimer === null) {
        retryTimer = window.setTimeout(async () => {
          retryTimer = null;
          try {
            const snap = await client.getState(sessionId);
            setVm(applySnapshot(vm, snap));
            subscribe(sessionId);
          } catch {
            setVm({ ...vm, status: "error", banner: "session unreachable" });
          }
        }, 1000);
      }
    },
  );
}

async function connect(sessionId: string) {
  try {
    const snap = await client.getState(sessionId);
    setVm(applySnapshot(connectTo(vm, sessionId, snap.task), snap));
    subscribe(sessionId);
  } catch (err) {
    setVm({ ...vm, status: "error", banner: String(err) });
  }
}

$("connect").addEventListener("click", () => {
  client = new ServiceClient(($("server") as HTMLInputElement).value.replace(/\/$/, ""));
  const sid = ($("session") as HTMLInputElement).value.trim();
  if (sid) void connect(sid);
});

$("new-session").addEventListener("click", async () => {
  client = new ServiceClient(($("server") as HTMLInputElement).value.replace(/\/$/, ""));
  const task = ($("task") as HTMLSelectElement).value;
  try {
    const sid = await client.createSession(task, Math.floor(Math.random() * 10000));
    ($("session") as HTMLInputElement).value = sid;
    void connect(sid);
  } catch (err) {
    setVm({ ...vm, status: "error", banner: String(err) });
  }
});

canvas.addEventListener("pointerdown", (e) => {
  if (!perturbationsEnabled(vm) || vm.state === null) return;
  const r = canvas.getBoundingClientRect();
  dragging = { name: "?", x: e.clientX - r.left, y: e.clientY - r.top };
});

canvas.addEventListener("pointerup", async (e) => {
  if (dragging === null || vm.state === null || vm.sessionId === null) {
    dragging = null;
    return;
  }
  const r = canvas.getBoundingClientRect();
  const gesture = { fromX: dragging.x, fromY: dragging.y, toX: e.clientX - r.left, toY: e.clientY - r.top };
  dragging = null;
  dirty = true;
  if (!perturbationsEnabled(vm)) return;
  const mutation = gestureToMutation(vm.state, gesture);
  if (mutation === null) return;
  const result = await client.perturb(vm.sessionId, mutation);
  setVm({
    ...vm,
    lastRejection: result.ok ? null : (result.detail ?? "rejected"),
    banner: result.ok ? `applied ${mutation.op}` : `rejected: ${result.detail}`,
  });
});

render();
