"""Task definitions and symbolic transition semantics.

``legal_actions`` is task-aware: it returns exactly the symbols that move
the given task forward from the given state (approach symbols when the arm
still has to reach the relevant object, the manipulation action once it
has, the terminal symbol once the goal holds). ``apply`` enforces only the
physical preconditions of a symbol, so it can replay any alphabet symbol
without knowing the task.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import PreconditionError
from ..symbols import BLOCKS, MANIPULATION, Alphabet, alphabet_for_task
from .states import (
    BLOCK_NAMES,
    BLOCK_TARGETS,
    HANDLE_CLOSED,
    HANDLE_OPEN,
    HOME_POSE,
    RELEASE_OFFSET,
    STANDOFF,
    BlocksState,
    ManipulationState,
    WorldState,
)

# Manipulation actions and the arm target each one is executed from.
ACTION_TARGET = {"A": "cup", "B": "ball", "C": "cup", "D": "cup", "E": "open", "F": "close"}
APPROACH_OF = {"cup": "G", "ball": "H", "open": "I", "close": "J"}
ACTION_OF_APPROACH = {v: k for k, v in APPROACH_OF.items()}

BLOCK_GLYPHS = {"blue": "B", "red": "R", "yellow": "Y", "green": "G", "pink": "P"}
GLYPH_BLOCKS = {v: k for k, v in BLOCK_GLYPHS.items()}
BLOCK_PREREQ = {"green": "yellow", "pink": "red"}


@dataclass(frozen=True)
class TaskSpec:
    """One task family member: which sub-goals it demands and how it starts."""

    task_id: str
    kind: str  # "manipulation" | "blocks"
    needs_cup_in_cabinet: bool = False
    needs_door_closed: bool = False

    @property
    def alphabet(self) -> Alphabet:
        return alphabet_for_task(self.kind)

    def sample_initial_state(self, rng: np.random.Generator) -> WorldState:
        if self.kind == "blocks":
            return BlocksState.sample(rng)
        if self.task_id == "c":
            return ManipulationState.sample(rng, door="closed", cup_loc="table", ball_loc="table")
        if self.task_id in ("abc", "abcd"):
            return ManipulationState.sample(rng, door="open", cup_loc="cabinet", ball_loc="cabinet")
        # abcdef: any combination of door state and object residence
        door = "closed" if rng.random() < 0.5 else "open"
        cup_loc = "cabinet" if rng.random() < 0.5 else "table"
        ball_loc = "cabinet" if rng.random() < 0.5 else "table"
        return ManipulationState.sample(rng, door=door, cup_loc=cup_loc, ball_loc=ball_loc)


TASKS: dict[str, TaskSpec] = {
    "c": TaskSpec("c", "manipulation"),
    "abc": TaskSpec("abc", "manipulation"),
    "abcd": TaskSpec("abcd", "manipulation", needs_cup_in_cabinet=True),
    "abcdef": TaskSpec("abcdef", "manipulation", needs_cup_in_cabinet=True, needs_door_closed=True),
    "blocks": TaskSpec("blocks", "blocks"),
}


def get_task(task_id: str) -> TaskSpec:
    try:
        return TASKS[task_id.lower()]
    except KeyError:
        raise ValueError(f"unknown task {task_id!r}; expected one of {sorted(TASKS)}") from None


def goal_reached(state: WorldState, task: TaskSpec) -> bool:
    if task.kind == "blocks":
        return all(state.placed[name] for name in BLOCK_NAMES)
    if state.ball_loc != "in_cup":
        return False
    if task.needs_cup_in_cabinet and state.cup_loc != "cabinet":
        return False
    if task.needs_door_closed and state.door != "closed":
        return False
    return True


def _pending_manipulation_actions(state: ManipulationState, task: TaskSpec) -> set[str]:
    """Manipulation actions (glyphs A-F) that make progress right now."""
    pending: set[str] = set()
    out = ("table", "gripper")
    if state.ball_loc != "in_cup":
        if state.cup_loc == "cabinet":
            pending.add("A" if state.door == "open" else "E")
        if state.ball_loc == "cabinet":
            pending.add("B" if state.door == "open" else "E")
        if state.cup_loc in out and state.ball_loc in out:
            pending.add("C")
    elif task.needs_cup_in_cabinet and state.cup_loc != "cabinet":
        pending.add("D" if state.door == "open" else "E")
    elif task.needs_door_closed and state.door == "open":
        pending.add("F")
    return pending


def _movable_blocks(state: BlocksState) -> set[str]:
    movable = set()
    for name in BLOCK_NAMES:
        if state.placed[name]:
            continue
        prereq = BLOCK_PREREQ.get(name)
        if prereq is not None and not state.placed[prereq]:
            continue
        movable.add(name)
    return movable


def legal_actions(state: WorldState, task: TaskSpec) -> frozenset[int]:
    """Symbol ids that advance the task from this state.

    Returns exactly ``{#}`` at a manipulation goal state and the empty set
    at the blocks goal (that alphabet has no terminal symbol). The
    no-action symbol is never a task action and is never included.
    """
    state.validate()
    alpha = task.alphabet
    if task.kind == "blocks":
        return frozenset(alpha.id_of(BLOCK_GLYPHS[b]) for b in _movable_blocks(state))
    if goal_reached(state, task):
        return frozenset({alpha.id_of("#")})
    legal: set[str] = set()
    for glyph in _pending_manipulation_actions(state, task):
        target = ACTION_TARGET[glyph]
        if state.arm == f"at:{target}":
            legal.add(glyph)
        else:
            legal.add(APPROACH_OF[target])
    return frozenset(alpha.id_of(g) for g in legal)


def oracle_action(state: WorldState, task: TaskSpec, rng: np.random.Generator | None = None) -> int:
    """Pick one legal symbol: a real action if the arm is in position,
    otherwise an approach; lowest id unless an rng is given."""
    legal = legal_actions(state, task)
    if not legal:
        raise PreconditionError("?", "no action available (blocks goal state)")
    if task.kind == "blocks":
        pool = sorted(legal)
    else:
        alpha = task.alphabet
        actions = [i for i in legal if alpha.glyph_of(i) in ACTION_TARGET or alpha.glyph_of(i) == "#"]
        pool = sorted(actions) if actions else sorted(legal)
    if rng is None:
        return pool[0]
    return int(pool[rng.integers(len(pool))])


def _physical_violation(state: WorldState, glyph: str) -> str | None:
    """Why this symbol cannot physically execute here, or None if it can."""
    if isinstance(state, BlocksState):
        if glyph not in GLYPH_BLOCKS:
            return f"symbol {glyph!r} is not a block move"
        block = GLYPH_BLOCKS[glyph]
        if state.placed[block]:
            return f"{block} is already placed"
        prereq = BLOCK_PREREQ.get(block)
        if prereq is not None and not state.placed[prereq]:
            return f"{prereq} must be placed before {block}"
        return None

    door_open = state.door == "open"
    if glyph in ACTION_OF_APPROACH:
        target = ACTION_OF_APPROACH[glyph]
        if target == "open" and state.door != "closed":
            return "door is already open"
        if target == "close" and state.door != "open":
            return "door is already closed"
        if target == "cup" and state.cup_loc == "cabinet" and not door_open:
            return "cup is in the cabinet and the door is closed"
        if target == "ball" and state.ball_loc == "cabinet" and not door_open:
            return "ball is in the cabinet and the door is closed"
        return None
    if glyph == "#":
        return None
    if glyph not in ACTION_TARGET:
        return f"symbol {glyph!r} is not a manipulation action"
    needed_arm = f"at:{ACTION_TARGET[glyph]}"
    if state.arm != needed_arm:
        return f"arm must be {needed_arm} (is {state.arm})"
    if glyph == "A":
        if state.cup_loc != "cabinet":
            return "cup is not in the cabinet"
        if not door_open:
            return "door must be open to reach the cup"
    elif glyph == "B":
        if state.ball_loc != "cabinet":
            return "ball is not in the cabinet"
        if not door_open:
            return "door must be open to reach the ball"
    elif glyph == "C":
        if state.ball_loc not in ("table", "gripper"):
            return "ball must be out on the table"
        if state.cup_loc not in ("table", "gripper"):
            return "cup must be out on the table"
    elif glyph == "D":
        if state.ball_loc != "in_cup":
            return "ball must be in the cup"
        if state.cup_loc != "table":
            return "cup must be on the table"
        if not door_open:
            return "door must be open to reach the cabinet"
    elif glyph == "E":
        if state.door != "closed":
            return "door is already open"
    elif glyph == "F":
        if state.door != "open":
            return "door is already closed"
    return None


def apply(state: WorldState, symbol_id: int) -> WorldState:
    """Deterministic successor after completing one symbol.

    The no-action symbol is a fixpoint. Raises ``PreconditionError``
    (with the violated predicate) when the symbol cannot execute here.
    """
    state.validate()
    alpha = BLOCKS if isinstance(state, BlocksState) else MANIPULATION
    glyph = alpha.glyph_of(symbol_id)
    if glyph == "_":
        return state.copy()
    violation = _physical_violation(state, glyph)
    if violation is not None:
        raise PreconditionError(glyph, violation)

    nxt = state.copy()
    if isinstance(state, BlocksState):
        block = GLYPH_BLOCKS[glyph]
        nxt.placed[block] = True
        nxt.poses[block] = BLOCK_TARGETS[block].copy()
        nxt.moving = None
        nxt.target = np.zeros(3)
        nxt.validate()
        return nxt

    if glyph in ACTION_OF_APPROACH:
        target = ACTION_OF_APPROACH[glyph]
        nxt.arm = f"at:{target}"
        if target == "cup":
            anchor = nxt.poses["cup"]
        elif target == "ball":
            anchor = nxt.poses["ball"]
        else:
            anchor = nxt.handle_pose()
        nxt.ee = anchor + STANDOFF
    elif glyph == "A":
        nxt.cup_loc = "table"
        nxt.poses["cup"] = nxt.slots["cup_table"].copy()
        nxt.ee = nxt.poses["cup"] + RELEASE_OFFSET
        nxt.arm = "default"
    elif glyph == "B":
        nxt.ball_loc = "table"
        nxt.poses["ball"] = nxt.slots["ball_table"].copy()
        nxt.ee = nxt.poses["ball"] + RELEASE_OFFSET
        nxt.arm = "default"
    elif glyph == "C":
        nxt.ball_loc = "in_cup"
        nxt.poses["ball"] = nxt.poses["cup"].copy()
        nxt.ee = nxt.poses["cup"] + RELEASE_OFFSET
        nxt.arm = "default"
    elif glyph == "D":
        nxt.cup_loc = "cabinet"
        nxt.poses["cup"] = nxt.slots["cup_cabinet"].copy()
        nxt.poses["ball"] = nxt.poses["cup"].copy()
        nxt.ee = nxt.poses["cup"] + RELEASE_OFFSET
        nxt.arm = "default"
    elif glyph == "E":
        nxt.door = "open"
        nxt.door_frac = 1.0
        nxt.ee = HANDLE_OPEN.copy()
        nxt.arm = "default"
    elif glyph == "F":
        nxt.door = "closed"
        nxt.door_frac = 0.0
        nxt.ee = HANDLE_CLOSED.copy()
        nxt.arm = "default"
    elif glyph == "#":
        nxt.ee = HOME_POSE.copy()
        nxt.arm = "default"
    nxt.carrying = "none"
    nxt.target = nxt.ee.copy()
    nxt.validate()
    return nxt
