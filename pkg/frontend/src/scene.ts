// Canvas renderer for the schematic scene. Draws only what the server
// reported: zones, the sliding door, objects, blocks, and the end-effector.

import {
  BLOCKS_TABLE_ZONE,
  CABINET_ZONE,
  CANVAS_H,
  CANVAS_W,
  DOOR_TRACK,
  Rect,
  STACK_ZONE,
  TABLE_ZONE,
  worldToCanvas,
} from "./layout.js";
import { StateWire } from "./types.js";

const BLOCK_COLORS: Record<string, string> = {
  blue: "#3a76d6",
  red: "#d64040",
  yellow: "#e0c341",
  green: "#4da860",
  pink: "#d977b8",
};

function zone(ctx: CanvasRenderingContext2D, r: Rect, label: string, fill: string) {
  ctx.fillStyle = fill;
  ctx.strokeStyle = "#5a5f6b";
  ctx.lineWidth = 1.5;
  ctx.fillRect(r.x, r.y, r.w, r.h);
  ctx.strokeRect(r.x, r.y, r.w, r.h);
  ctx.fillStyle = "#9aa1ad";
  ctx.font = "12px system-ui";
  ctx.fillText(label, r.x + 8, r.y + 16);
}

export function drawScene(ctx: CanvasRenderingContext2D, state: StateWire | null, dragging: string | null) {
  ctx.clearRect(0, 0, CANVAS_W, CANVAS_H);
  ctx.fillStyle = "#14161c";
  ctx.fillRect(0, 0, CANVAS_W, CANVAS_H);
  if (state === null) {
    ctx.fillStyle = "#767d89";
    ctx.font = "15px system-ui";
    ctx.fillText("no session connected", CANVAS_W / 2 - 70, CANVAS_H / 2);
    return;
  }

  if (state.kind === "manipulation") {
    zone(ctx, TABLE_ZONE, "table", "#1c2027");
    zone(ctx, CABINET_ZONE, "cabinet", "#1a1d2e");

    // door slides along its track; fraction 1 = fully open
    const frac = state.door_frac;
    const slot = DOOR_TRACK;
    ctx.fillStyle = "#2a3040";
    ctx.fillRect(slot.x, slot.y, slot.w, slot.h);
    ctx.fillStyle = state.door === "open" ? "#3f6b4a" : "#6b4a3f";
    const doorH = slot.h * 0.55;
    const doorY = slot.y + frac * (slot.h - doorH);
    ctx.fillRect(slot.x + 2, doorY, slot.w - 4, doorH);
    ctx.fillStyle = "#cfd6e4";
    ctx.font = "11px system-ui";
    ctx.fillText(state.door, slot.x - 4, slot.y - 6);

    const cup = worldToCanvas(state.poses.cup, "manipulation");
    const ball = worldToCanvas(state.poses.ball, "manipulation");
    const ee = worldToCanvas(state.ee, "manipulation");

    ctx.strokeStyle = "#8892a4";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(cup.x, cup.y, 16, Math.PI * 0.15, Math.PI * 1.85);
    ctx.stroke();
    ctx.fillStyle = dragging === "cup" ? "#e8edf7" : "#aeb8cc";
    ctx.fillText("cup", cup.x - 10, cup.y + 30);

    ctx.fillStyle = dragging === "ball" ? "#ffd27e" : "#e0a33b";
    ctx.beginPath();
    ctx.arc(ball.x, ball.y, 9, 0, Math.PI * 2);
    ctx.fill();

    ctx.strokeStyle = "#55d6c2";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(ee.x - 8, ee.y);
    ctx.lineTo(ee.x + 8, ee.y);
    ctx.moveTo(ee.x, ee.y - 8);
    ctx.lineTo(ee.x, ee.y + 8);
    ctx.stroke();
    return;
  }

  zone(ctx, BLOCKS_TABLE_ZONE, "table", "#1c2027");
  zone(ctx, STACK_ZONE, "stacks", "#1a1d2e");
  for (const [name, pose] of Object.entries(state.poses)) {
    const p = worldToCanvas(pose, "blocks");
    const lifted = pose[2] > 0.03;
    const size = state.placed[name] ? 30 : 26;
    ctx.fillStyle = BLOCK_COLORS[name] ?? "#888";
    ctx.globalAlpha = lifted ? 0.85 : 1.0;
    ctx.fillRect(p.x - size / 2, p.y - size / 2, size, size);
    ctx.globalAlpha = 1.0;
    ctx.strokeStyle = dragging === name ? "#ffffff" : "#14161c";
    ctx.lineWidth = 2;
    ctx.strokeRect(p.x - size / 2, p.y - size / 2, size, size);
  }
}
