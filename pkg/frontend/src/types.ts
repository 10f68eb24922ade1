// Wire types mirroring the session service's JSON payloads.

export interface ManipulationStateWire {
  kind: "manipulation";
  door: "open" | "closed";
  door_frac: number;
  cup_loc: "cabinet" | "table" | "gripper";
  ball_loc: "cabinet" | "table" | "in_cup" | "gripper";
  arm: string;
  carrying: string;
  ee: number[];
  target: number[];
  poses: { cup: number[]; ball: number[] };
  slots: Record<string, number[]>;
}

export interface BlocksStateWire {
  kind: "blocks";
  placed: Record<string, boolean>;
  poses: Record<string, number[]>;
  moving: string | null;
  target: number[];
}

export type StateWire = ManipulationStateWire | BlocksStateWire;

export interface StepEvent {
  event: "step";
  tick: number;
  predicted: number | null;
  queue: number[];
  executed: number;
  state: StateWire;
}

export interface MispredictionEvent {
  event: "misprediction";
  tick: number;
  symbol: number;
  why: string;
}

export interface FinishedEvent {
  event: "finished";
  tick: number;
  outcome: {
    verdict: "Success" | "Recovered" | "Failure";
    goal: boolean;
    mispredictions: number;
    ticks_used: number;
    reason: string;
  };
}

export type SessionEvent = StepEvent | MispredictionEvent | FinishedEvent;

export interface Snapshot {
  id: string;
  task: string;
  status: "running" | "finished";
  tick: number;
  state: StateWire;
  queue: number[];
  last_prediction: number | null;
  outcome: FinishedEvent["outcome"] | null;
}

export type Mutation =
  | { op: "move_object"; object: "cup" | "ball"; to: "cabinet" | "table" | "in_cup" }
  | { op: "set_door"; state: "open" | "closed" }
  | { op: "move_block"; block: string; to?: "table" };

export const MANIPULATION_GLYPHS = ["A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "_", "#"];
export const BLOCKS_GLYPHS = ["B", "R", "Y", "G", "P", "_"];

export function glyphFor(task: string, symbol: number | null): string {
  if (symbol === null) return "·";
  const table = task === "blocks" ? BLOCKS_GLYPHS : MANIPULATION_GLYPHS;
  return table[symbol] ?? "?";
}
