import { describe, expect, it } from "vitest";

import { gestureToMutation } from "../src/gestures.js";
import { CABINET_ZONE, DOOR_TRACK, TABLE_ZONE, worldToCanvas } from "../src/layout.js";
import { BlocksStateWire, ManipulationStateWire } from "../src/types.js";

const BALL_POSE = [0.3, 0.2, 0.03];
const CUP_POSE = [0.3, -0.2, 0.03];

function manipState(): ManipulationStateWire {
  return {
    kind: "manipulation",
    door: "closed",
    door_frac: 0,
    cup_loc: "table",
    ball_loc: "table",
    arm: "default",
    carrying: "none",
    ee: [0.1, 0, 0.45],
    target: [0.1, 0, 0.45],
    poses: { cup: CUP_POSE, ball: BALL_POSE },
    slots: {},
  };
}

function blocksState(): BlocksStateWire {
  return {
    kind: "blocks",
    placed: { blue: true, red: false, yellow: false, green: false, pink: false },
    poses: {
      blue: [0.15, 0.0, 0.02],
      red: [0.7, 0.2, 0.02],
      yellow: [0.7, -0.2, 0.02],
      green: [0.8, 0.0, 0.02],
      pink: [0.6, 0.0, 0.02],
    },
    moving: null,
    target: [0, 0, 0],
  };
}

const center = (r: { x: number; y: number; w: number; h: number }) => ({ x: r.x + r.w / 2, y: r.y + r.h / 2 });

describe("gesture mapping", () => {
  it("dragging the ball to the cabinet zone posts a move_object mutation", () => {
    const state = manipState();
    const from = worldToCanvas(BALL_POSE, "manipulation");
    const to = center(CABINET_ZONE);
    const mutation = gestureToMutation(state, { fromX: from.x, fromY: from.y, toX: to.x, toY: to.y });
    expect(mutation).toEqual({ op: "move_object", object: "ball", to: "cabinet" });
  });

  it("dragging the cup to the table zone targets the table", () => {
    const state = manipState();
    const from = worldToCanvas(CUP_POSE, "manipulation");
    const mutation = gestureToMutation(state, { fromX: from.x, fromY: from.y, toX: TABLE_ZONE.x + 30, toY: TABLE_ZONE.y + 30 });
    expect(mutation).toEqual({ op: "move_object", object: "cup", to: "table" });
  });

  it("clicking the closed door toggles it open", () => {
    const state = manipState();
    const spot = center(DOOR_TRACK);
    const mutation = gestureToMutation(state, { fromX: spot.x, fromY: spot.y, toX: spot.x + 1, toY: spot.y + 1 });
    expect(mutation).toEqual({ op: "set_door", state: "open" });
  });

  it("clicking the open door toggles it closed", () => {
    const state = { ...manipState(), door: "open" as const, door_frac: 1 };
    const spot = center(DOOR_TRACK);
    const mutation = gestureToMutation(state, { fromX: spot.x, fromY: spot.y, toX: spot.x, toY: spot.y });
    expect(mutation).toEqual({ op: "set_door", state: "closed" });
  });

  it("dragging from empty space maps to nothing", () => {
    const state = manipState();
    const mutation = gestureToMutation(state, { fromX: 5, fromY: 5, toX: 200, toY: 200 });
    expect(mutation).toBeNull();
  });

  it("dragging a placed block to the table unplaces it", () => {
    const state = blocksState();
    const from = worldToCanvas(state.poses.blue, "blocks");
    const mutation = gestureToMutation(state, { fromX: from.x, fromY: from.y, toX: 480, toY: 200 });
    expect(mutation).toEqual({ op: "move_block", block: "blue", to: "table" });
  });
});
