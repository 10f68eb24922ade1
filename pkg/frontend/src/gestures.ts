// Maps pointer gestures on the schematic scene to perturbation mutations.
// Pure functions: (scene state, gesture geometry) -> mutation or null.

import { hitObject, zoneAt } from "./layout.js";
import { Mutation, StateWire } from "./types.js";

export interface DragGesture {
  fromX: number;
  fromY: number;
  toX: number;
  toY: number;
}

export function gestureToMutation(state: StateWire, gesture: DragGesture): Mutation | null {
  const kind = state.kind;
  const grabbed = hitObject(gesture.fromX, gesture.fromY, state);
  const zone = zoneAt(gesture.toX, gesture.toY, kind);

  const isClick = Math.hypot(gesture.toX - gesture.fromX, gesture.toY - gesture.fromY) < 6;

  if (kind === "manipulation") {
    if (isClick && zone === "door" && grabbed === null) {
      return { op: "set_door", state: state.door === "open" ? "closed" : "open" };
    }
    if (grabbed === "cup" || grabbed === "ball") {
      if (zone === "cabinet" || zone === "table") {
        return { op: "move_object", object: grabbed, to: zone };
      }
      if (grabbed === "ball" && zone === null) {
        return null;
      }
    }
    return null;
  }

  // stacking task: dragging a placed block back to the table unplaces it
  if (grabbed !== null && zone === "table") {
    return { op: "move_block", block: grabbed, to: "table" };
  }
  return null;
}
