// Canvas layout: a top-down schematic of the workspace. World x runs away
// from the robot (toward the cabinet, right of canvas); world y runs left
// to right across the table (down the canvas).

import { StateWire } from "./types.js";

export const CANVAS_W = 680;
export const CANVAS_H = 400;

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
  name: string;
}

// manipulation zones
export const TABLE_ZONE: Rect = { x: 60, y: 40, w: 300, h: 320, name: "table" };
export const CABINET_ZONE: Rect = { x: 430, y: 60, w: 200, h: 280, name: "cabinet" };
export const DOOR_TRACK: Rect = { x: 400, y: 60, w: 22, h: 280, name: "door" };

// stacking zones: a strip of table plus one drop slot per stack
export const BLOCKS_TABLE_ZONE: Rect = { x: 330, y: 40, w: 300, h: 320, name: "table" };
export const STACK_ZONE: Rect = { x: 40, y: 40, w: 250, h: 320, name: "stacks" };

export function worldToCanvas(pose: number[], kind: "manipulation" | "blocks"): { x: number; y: number } {
  // world x in [0.05, 0.95], y in [-0.5, 0.5]
  const wx = pose[0];
  const wy = pose[1];
  if (kind === "manipulation") {
    return { x: 60 + ((wx - 0.05) / 0.9) * 570, y: 200 + wy * 320 };
  }
  return { x: 40 + ((wx - 0.05) / 0.9) * 590, y: 200 + wy * 320 };
}

export function inRect(px: number, py: number, r: Rect): boolean {
  return px >= r.x && px <= r.x + r.w && py >= r.y && py <= r.y + r.h;
}

export function zoneAt(px: number, py: number, kind: "manipulation" | "blocks"): string | null {
  if (kind === "manipulation") {
    if (inRect(px, py, DOOR_TRACK)) return "door";
    if (inRect(px, py, CABINET_ZONE)) return "cabinet";
    if (inRect(px, py, TABLE_ZONE)) return "table";
    return null;
  }
  if (inRect(px, py, BLOCKS_TABLE_ZONE)) return "table";
  if (inRect(px, py, STACK_ZONE)) return "stacks";
  return null;
}

export interface Draggable {
  name: string; // "cup" | "ball" | block name
  x: number;
  y: number;
  radius: number;
}

export function draggables(state: StateWire): Draggable[] {
  if (state.kind === "manipulation") {
    const cup = worldToCanvas(state.poses.cup, "manipulation");
    const ball = worldToCanvas(state.poses.ball, "manipulation");
    return [
      { name: "cup", x: cup.x, y: cup.y, radius: 18 },
      { name: "ball", x: ball.x, y: ball.y, radius: 12 },
    ];
  }
  return Object.entries(state.poses).map(([name, pose]) => {
    const p = worldToCanvas(pose, "blocks");
    return { name, x: p.x, y: p.y, radius: 16 };
  });
}

export function hitObject(px: number, py: number, state: StateWire): string | null {
  for (const d of draggables(state)) {
    const dist = Math.hypot(px - d.x, py - d.y);
    if (dist <= d.radius + 6) return d.name;
  }
  return null;
}
