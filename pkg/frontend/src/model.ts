// View model: a pure fold over the server's event stream. The console
// renders exactly this structure; it never simulates anything locally.

import { SessionEvent, Snapshot, StateWire, glyphFor } from "./types.js";

export const TICKER_LENGTH = 24;

export interface ViewModel {
  sessionId: string | null;
  task: string;
  status: "idle" | "connecting" | "running" | "finished" | "error";
  tick: number;
  state: StateWire | null;
  queue: number[];
  ticker: string[]; // most recent predicted glyphs, newest last
  executed: string | null;
  mispredictions: number;
  lastRejection: string | null;
  banner: string | null;
  eventCount: number;
}

export function initialViewModel(): ViewModel {
  return {
    sessionId: null,
    task: "abcdef",
    status: "idle",
    tick: 0,
    state: null,
    queue: [],
    ticker: [],
    executed: null,
    mispredictions: 0,
    lastRejection: null,
    banner: null,
    eventCount: 0,
  };
}

export function connectTo(vm: ViewModel, sessionId: string, task: string): ViewModel {
  return { ...initialViewModel(), sessionId, task, status: "connecting" };
}

export function applySnapshot(vm: ViewModel, snap: Snapshot): ViewModel {
  return {
    ...vm,
    sessionId: snap.id,
    task: snap.task,
    status: snap.status === "finished" ? "finished" : "running",
    tick: snap.tick,
    state: snap.state,
    queue: snap.queue,
    banner: snap.outcome ? `${snap.outcome.verdict}: ${snap.outcome.reason}` : vm.banner,
  };
}

export function applyEvent(vm: ViewModel, event: SessionEvent): ViewModel {
  const next = { ...vm, eventCount: vm.eventCount + 1 };
  switch (event.event) {
    case "step": {
      const glyph = glyphFor(vm.task, event.predicted);
      const ticker = [...vm.ticker, glyph].slice(-TICKER_LENGTH);
      return {
        ...next,
        status: "running",
        tick: event.tick,
        state: event.state,
        queue: event.queue,
        ticker,
        executed: glyphFor(vm.task, event.executed),
      };
    }
    case "misprediction":
      return {
        ...next,
        mispredictions: vm.mispredictions + 1,
        banner: `recovering: ${event.why}`,
      };
    case "finished":
      return {
        ...next,
        status: "finished",
        tick: event.tick,
        banner: `${event.outcome.verdict} after ${event.outcome.ticks_used} ticks (${event.outcome.reason})`,
      };
    default:
      return next;
  }
}

export function replay(events: SessionEvent[], sessionId: string, task: string): ViewModel {
  let vm = connectTo(initialViewModel(), sessionId, task);
  for (const e of events) vm = applyEvent(vm, e);
  return vm;
}

export function perturbationsEnabled(vm: ViewModel): boolean {
  return vm.status === "running";
}
