"""Continuous motion underneath each symbol.

Every non-trivial symbol drives one point (the end-effector, or the moving
block) toward a resolved target pose. Demonstrations and the closed-loop
executor share these resolvers so that generated training frames and live
frames show the same geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..symbols import BLOCKS, MANIPULATION
from .states import (
    BLOCK_TARGETS,
    HANDLE_CLOSED,
    HANDLE_OPEN,
    HOME_POSE,
    STANDOFF,
    BlocksState,
    ManipulationState,
    WorldState,
)
from .tasks import ACTION_OF_APPROACH, GLYPH_BLOCKS

COMPLETION_TOL = 0.01  # meters
DOOR_SLIDE = float(np.linalg.norm(HANDLE_OPEN - HANDLE_CLOSED))


@dataclass(frozen=True)
class MotionSpec:
    """Resolved continuous motion for one symbol in one state."""

    symbol_id: int
    glyph: str
    target: np.ndarray
    carried: str | None = None  # "cup" | "ball" for manipulation moves
    block: str | None = None  # moving block for the stacking task
    door: str | None = None  # "opening" | "closing"

    def start_point(self, state: WorldState) -> np.ndarray:
        if self.block is not None:
            return state.poses[self.block].copy()
        return state.ee.copy()


def resolve_motion(state: WorldState, symbol_id: int) -> MotionSpec:
    """Target pose and side information for executing ``symbol_id`` here."""
    if isinstance(state, BlocksState):
        glyph = BLOCKS.glyph_of(symbol_id)
        block = GLYPH_BLOCKS[glyph]
        return MotionSpec(symbol_id, glyph, BLOCK_TARGETS[block].copy(), block=block)

    glyph = MANIPULATION.glyph_of(symbol_id)
    if glyph in ACTION_OF_APPROACH:
        kind = ACTION_OF_APPROACH[glyph]
        if kind == "cup":
            anchor = state.poses["cup"]
        elif kind == "ball":
            anchor = state.poses["ball"]
        else:
            anchor = state.handle_pose()
        return MotionSpec(symbol_id, glyph, anchor + STANDOFF)
    if glyph == "A":
        return MotionSpec(symbol_id, glyph, state.slots["cup_table"].copy(), carried="cup")
    if glyph == "B":
        return MotionSpec(symbol_id, glyph, state.slots["ball_table"].copy(), carried="ball")
    if glyph == "C":
        return MotionSpec(symbol_id, glyph, state.poses["cup"].copy(), carried="ball")
    if glyph == "D":
        return MotionSpec(symbol_id, glyph, state.slots["cup_cabinet"].copy(), carried="cup")
    if glyph == "E":
        return MotionSpec(symbol_id, glyph, HANDLE_OPEN.copy(), carried="handle", door="opening")
    if glyph == "F":
        return MotionSpec(symbol_id, glyph, HANDLE_CLOSED.copy(), carried="handle", door="closing")
    if glyph == "#":
        return MotionSpec(symbol_id, glyph, HOME_POSE.copy())
    raise ValueError(f"symbol {glyph!r} has no motion")


def motion_view(state: WorldState, spec: MotionSpec, point: np.ndarray) -> WorldState:
    """State as seen mid-motion, with the moving point at ``point``.

    Symbolic fields keep their pre-action values; carried objects ride the
    end-effector and the door fraction tracks handle progress.
    """
    view = state.copy()
    if spec.block is not None:
        view.poses[spec.block] = point.copy()
        view.moving = spec.block
        view.target = spec.target.copy()
        return view

    view.ee = point.copy()
    view.target = spec.target.copy()
    if spec.carried is not None:
        view.carrying = spec.carried
        if spec.carried in ("cup", "ball"):
            view.poses[spec.carried] = point.copy()
            if spec.carried == "cup" and view.ball_loc == "in_cup":
                view.poses["ball"] = point.copy()
    if spec.door == "opening":
        dist = float(np.linalg.norm(point - HANDLE_OPEN))
        view.door_frac = float(np.clip(1.0 - dist / DOOR_SLIDE, 0.0, 1.0))
    elif spec.door == "closing":
        dist = float(np.linalg.norm(point - HANDLE_CLOSED))
        view.door_frac = float(np.clip(dist / DOOR_SLIDE, 0.0, 1.0))
    return view


def exponential_path(start: np.ndarray, target: np.ndarray, n_frames: int, tol: float = COMPLETION_TOL) -> np.ndarray:
    """Poses along a first-order approach that reaches ``tol`` of the target
    exactly at the last of ``n_frames`` frames."""
    d0 = float(np.linalg.norm(start - target))
    if d0 <= tol:
        return np.tile(target, (n_frames, 1))
    # distance decays as d0 * exp(-rate * j), with rate chosen so the final
    # frame lands at tol
    rate = np.log(d0 / tol) / n_frames
    js = np.arange(1, n_frames + 1)
    scale = np.exp(-rate * js)[:, None]
    return target[None, :] + (start - target)[None, :] * scale
