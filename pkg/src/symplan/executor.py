"""Closed-loop execution: predictions feed a deduplicating symbol queue,
queued symbols dispatch first-order attractor primitives, and completed
primitives commit their symbolic effect to the world.

Two loop rates share one clock: the control loop integrates the active
primitive every tick (20 Hz), the symbol loop observes, predicts, and
enqueues every tenth tick (2 Hz), with observation frames rendered at
10 Hz in between for the model's window.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .embedder import FrameClassifier, render_observation
from .envsim.motion import COMPLETION_TOL, MotionSpec, motion_view, resolve_motion
from .envsim.states import (
    BLOCKS_TABLE_BOX,
    CABINET_BOX,
    HOME_POSE,
    TABLE_BOX,
    BlocksState,
    ManipulationState,
    WorldState,
)
from .envsim.tasks import TaskSpec, apply, get_task, goal_reached, legal_actions, oracle_action
from .errors import InvariantViolation, PreconditionError

CONTROL_HZ = 20.0
FRAME_EVERY = 2  # control ticks per observation frame (10 Hz)
PREDICT_EVERY = 10  # control ticks per symbol-loop step (2 Hz)
ATTRACTOR_GAIN = 2.0  # 1/s
DEFAULT_BUDGET = 4 * 600 * 2  # 4x the longest generated episode, in control ticks


class SymbolQueue:
    """Pending symbols with adjacent-duplicate suppression.

    A symbol is appended only if it differs from the last symbol that was
    ever enqueued (not merely the current tail), and the no-action symbol
    is never enqueued.
    """

    def __init__(self, no_action_id: int):
        self.no_action_id = no_action_id
        self.items: list[int] = []
        self.last_enqueued: int | None = None

    def push(self, symbol_id: int) -> bool:
        if symbol_id == self.no_action_id:
            return False
        if symbol_id == self.last_enqueued:
            return False
        self.items.append(symbol_id)
        self.last_enqueued = symbol_id
        return True

    def pop(self) -> int:
        return self.items.pop(0)

    def clear(self) -> None:
        self.items.clear()
        self.last_enqueued = None

    def __len__(self) -> int:
        return len(self.items)

    def snapshot(self) -> list[int]:
        return list(self.items)


class OraclePolicy:
    """Plans directly from the symbolic state; ties broken by lowest id."""

    def __init__(self, task: TaskSpec):
        self.task = task

    def reset(self) -> None:
        pass

    def observe(self, obs: np.ndarray) -> None:
        pass

    def predict(self, state: WorldState) -> int | None:
        legal = legal_actions(state, self.task)
        if not legal:
            return None
        return oracle_action(state, self.task)


class ModelPolicy:
    """Embeds the live observation stream and queries the sequence model."""

    def __init__(self, model, classifier: FrameClassifier):
        self.model = model
        self.classifier = classifier
        self.history: list[np.ndarray] = []

    def reset(self) -> None:
        self.history = []

    def observe(self, obs: np.ndarray) -> None:
        self.history.append(self.classifier.embed(obs))

    def predict(self, state: WorldState) -> int | None:
        if len(self.history) < self.model.window:
            return None
        window = np.asarray(self.history[-self.model.window :])
        return int(self.model.predict_next(window)[0])


def zone_pose(state: WorldState, obj: str, zone: str) -> np.ndarray:
    """Deterministic hand-placement pose for a mutation target zone."""
    offset = {"cup": -0.05, "ball": 0.05}.get(obj, 0.0)
    if zone == "cabinet":
        box = CABINET_BOX
    elif zone == "table":
        box = TABLE_BOX if isinstance(state, ManipulationState) else BLOCKS_TABLE_BOX
    else:
        raise ValueError(f"unknown zone {zone!r}")
    center = (box[0] + box[1]) / 2.0
    return center + np.array([0.0, offset, 0.0])


def apply_mutation(state: WorldState, mutation: dict) -> WorldState:
    """A hand edit of the scene. Placements ignore reachability (a person
    can reach past a closed door) but the result must satisfy all state
    invariants; raises ``InvariantViolation`` or ``ValueError`` otherwise."""
    if not isinstance(mutation, dict) or "op" not in mutation:
        raise ValueError("mutation must be an object with an 'op' field")
    op = mutation["op"]
    nxt = state.copy()

    if op == "move_object":
        if not isinstance(nxt, ManipulationState):
            raise ValueError("move_object applies to the manipulation task")
        obj = mutation.get("object")
        dest = mutation.get("to")
        if obj not in ("cup", "ball"):
            raise ValueError(f"unknown object {obj!r}")
        if isinstance(dest, (list, tuple)):
            pose = np.asarray(dest, dtype=float)
            loc = "table"
        elif dest == "in_cup":
            if obj != "ball":
                raise ValueError("only the ball fits in the cup")
            pose = nxt.poses["cup"].copy()
            loc = "in_cup"
        elif dest in ("cabinet", "table"):
            pose = zone_pose(nxt, obj, dest)
            loc = dest
        else:
            raise ValueError(f"unknown destination {dest!r}")
        if obj == "cup":
            nxt.cup_loc = loc
            nxt.poses["cup"] = pose
            if nxt.ball_loc == "in_cup":
                nxt.poses["ball"] = pose.copy()
        else:
            nxt.ball_loc = loc
            nxt.poses["ball"] = pose
    elif op == "set_door":
        if not isinstance(nxt, ManipulationState):
            raise ValueError("set_door applies to the manipulation task")
        target = mutation.get("state")
        if target not in ("open", "closed"):
            raise ValueError(f"door state must be open or closed, got {target!r}")
        nxt.door = target
        nxt.door_frac = 1.0 if target == "open" else 0.0
    elif op == "move_block":
        if not isinstance(nxt, BlocksState):
            raise ValueError("move_block applies to the stacking task")
        block = mutation.get("block")
        if block not in nxt.placed:
            raise ValueError(f"unknown block {block!r}")
        dest = mutation.get("to", "table")
        if isinstance(dest, (list, tuple)):
            pose = np.asarray(dest, dtype=float)
        else:
            pose = zone_pose(nxt, block, "table")
        nxt.placed[block] = False
        nxt.poses[block] = pose
    else:
        raise ValueError(f"unknown mutation op {op!r}")

    nxt.validate()
    return nxt


# Named trigger predicates for scripted perturbations.
TRIGGERS: dict[str, Callable[[WorldState], bool]] = {
    "ball_on_table": lambda s: isinstance(s, ManipulationState) and s.ball_loc == "table",
    "ball_in_cup": lambda s: isinstance(s, ManipulationState) and s.ball_loc == "in_cup",
    "cup_on_table": lambda s: isinstance(s, ManipulationState) and s.cup_loc == "table",
    "door_open": lambda s: isinstance(s, ManipulationState) and s.door == "open",
}


@dataclass
class Perturbation:
    mutation: dict
    at_tick: int | None = None
    when: str | None = None
    once: bool = True
    fired: bool = False

    def due(self, tick: int, state: WorldState) -> bool:
        if self.fired and self.once:
            return False
        if self.at_tick is not None:
            return tick == self.at_tick
        if self.when is not None:
            try:
                return TRIGGERS[self.when](state)
            except KeyError:
                raise ValueError(f"unknown trigger predicate {self.when!r}") from None
        return False

    @classmethod
    def from_dict(cls, data: dict) -> "Perturbation":
        return cls(
            mutation=data["mutation"],
            at_tick=data.get("at_tick"),
            when=data.get("when"),
            once=bool(data.get("once", True)),
        )


@dataclass
class EpisodeOutcome:
    verdict: str  # Success | Recovered | Failure
    goal: bool
    mispredictions: int
    ticks_used: int
    executed: list[int]
    trace: list[dict] = field(default_factory=list)
    reason: str = ""


class Runtime:
    """Single closed-loop episode: one logical clock, two loop rates."""

    def __init__(
        self,
        task: TaskSpec | str,
        policy,
        initial_state: WorldState | None = None,
        seed: int = 0,
        perturbations: list[Perturbation] | None = None,
        budget: int = DEFAULT_BUDGET,
        noise_std: float = 0.05,
        gain: float = ATTRACTOR_GAIN,
        keep_trace: bool = True,
    ):
        self.task = get_task(task) if isinstance(task, str) else task
        self.policy = policy
        self.rng = np.random.default_rng(seed)
        self.state: WorldState = (
            initial_state.copy() if initial_state is not None else self.task.sample_initial_state(self.rng)
        )
        self.perturbations = list(perturbations or [])
        self.budget = budget
        self.noise_std = noise_std
        self.gain = gain
        self.keep_trace = keep_trace

        self.alphabet = self.task.alphabet
        self.queue = SymbolQueue(self.alphabet.no_action_id)
        self.tick_no = 0
        self.active: MotionSpec | None = None
        self.point: np.ndarray | None = None
        self.mispredictions = 0
        self.executed: list[int] = []
        self.trace: list[dict] = []
        self.finished = False
        self.reason = ""
        self.last_prediction: int | None = None
        self.dt = 1.0 / CONTROL_HZ

    # -- state views -----------------------------------------------------

    def live_state(self) -> WorldState:
        if self.active is None or self.point is None:
            return self.state
        return motion_view(self.state, self.active, self.point)

    def goal(self) -> bool:
        return goal_reached(self.state, self.task)

    # -- perturbations -----------------------------------------------------

    def perturb(self, mutation: dict) -> None:
        """Apply a hand mutation between ticks; invalid edits raise."""
        self.state = apply_mutation(self.state, mutation)

    def _scripted_perturbations(self) -> None:
        for p in self.perturbations:
            if p.due(self.tick_no, self.state):
                p.fired = True
                self.perturb(p.mutation)

    # -- the clock ---------------------------------------------------------

    def _observe(self) -> None:
        self.policy.observe(render_observation(self.live_state(), self.noise_std, self.rng))

    def _predict(self) -> None:
        self.last_prediction = self.policy.predict(self.state)
        if self.last_prediction is not None:
            self.queue.push(self.last_prediction)

    def _recover(self, symbol_id: int, why: str) -> None:
        self.mispredictions += 1
        self.queue.clear()
        if self.keep_trace:
            self.trace.append(
                {
                    "tick": self.tick_no,
                    "event": "misprediction",
                    "symbol": int(symbol_id),
                    "why": why,
                }
            )
        # Retract to the default pose: the arm abandons whatever it was
        # lined up for and prediction restarts from a rest scene.
        if isinstance(self.state, ManipulationState):
            self.state.arm = "default"
            if float(np.linalg.norm(self.state.ee - HOME_POSE)) > COMPLETION_TOL:
                self.active = MotionSpec(symbol_id=-1, glyph="~", target=HOME_POSE.copy())
                self.point = self.state.ee.copy()

    def _dispatch(self) -> None:
        while self.active is None and len(self.queue):
            sym = self.queue.pop()
            legal = legal_actions(self.state, self.task)
            if sym not in legal:
                glyph = self.alphabet.glyph_of(sym)
                self._recover(sym, f"{glyph!r} not legal here")
                continue
            spec = resolve_motion(self.state, sym)
            self.active = spec
            self.point = spec.start_point(self.state)

    def _step_motion(self) -> None:
        if self.active is None or self.point is None:
            return
        self.point = self.point + self.gain * (self.active.target - self.point) * self.dt
        if float(np.linalg.norm(self.point - self.active.target)) < COMPLETION_TOL:
            spec = self.active
            self.active = None
            self.point = None
            if spec.glyph == "~":  # recovery retraction: no symbolic effect
                self.state.ee = spec.target.copy()
                self.state.target = spec.target.copy()
                self._dispatch()
                return
            try:
                self.state = apply(self.state, spec.symbol_id)
            except PreconditionError as err:
                self._recover(spec.symbol_id, f"commit failed: {err.predicate}")
                return
            self.executed.append(spec.symbol_id)
            if spec.glyph == "#":
                self.finished = True
                self.reason = "terminal symbol completed"
            self._dispatch()

    def _trace_event(self) -> None:
        if not self.keep_trace:
            return
        executing = self.active is not None and self.active.symbol_id >= 0
        self.trace.append(
            {
                "tick": self.tick_no,
                "event": "step",
                "predicted": None if self.last_prediction is None else int(self.last_prediction),
                "queue": self.queue.snapshot(),
                "executed": int(self.active.symbol_id) if executing else int(self.alphabet.no_action_id),
                "state": self.live_state().to_dict(),
            }
        )

    def tick(self) -> None:
        """One control tick; the symbol loop runs on every tenth tick."""
        if self.finished:
            return
        self._scripted_perturbations()
        if self.tick_no % FRAME_EVERY == 0:
            self._observe()
        predict_now = self.tick_no % PREDICT_EVERY == 0
        if predict_now:
            self._predict()
        if self.active is None:
            self._dispatch()
        self._step_motion()
        if predict_now:
            self._trace_event()
        self.tick_no += 1

        if self.task.kind == "blocks" and self.goal() and self.active is None and not len(self.queue):
            self.finished = True
            self.reason = "goal reached"
        if not self.finished and self.tick_no >= self.budget:
            self.finished = True
            self.reason = "budget exhausted"

    def outcome(self) -> EpisodeOutcome:
        goal = self.goal()
        if goal and self.mispredictions == 0:
            verdict = "Success"
        elif goal:
            verdict = "Recovered"
        else:
            verdict = "Failure"
        return EpisodeOutcome(
            verdict=verdict,
            goal=goal,
            mispredictions=self.mispredictions,
            ticks_used=self.tick_no,
            executed=list(self.executed),
            trace=self.trace,
            reason=self.reason,
        )

    def run(self) -> EpisodeOutcome:
        self.policy.reset()
        while not self.finished:
            self.tick()
        return self.outcome()


def run_episode(
    task: TaskSpec | str,
    policy,
    seed: int = 0,
    initial_state: WorldState | None = None,
    perturbations: list[Perturbation] | None = None,
    budget: int = DEFAULT_BUDGET,
    noise_std: float = 0.05,
    keep_trace: bool = True,
) -> EpisodeOutcome:
    runtime = Runtime(
        task,
        policy,
        initial_state=initial_state,
        seed=seed,
        perturbations=perturbations,
        budget=budget,
        noise_std=noise_std,
        keep_trace=keep_trace,
    )
    return runtime.run()


@dataclass
class RolloutCounts:
    success: int = 0
    recovered: int = 0
    failure: int = 0
    outcomes: list[EpisodeOutcome] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.success + self.recovered + self.failure

    @property
    def accuracy(self) -> float:
        return (self.success + self.recovered) / max(1, self.n)

    def as_dict(self) -> dict:
        return {
            "success": self.success,
            "recovered": self.recovered,
            "failure": self.failure,
            "n": self.n,
            "accuracy": self.accuracy,
        }


def batch_rollout(
    task: TaskSpec | str,
    policy,
    n: int,
    seed: int = 0,
    perturbations: list[dict] | None = None,
    budget: int = DEFAULT_BUDGET,
    noise_std: float = 0.05,
    keep_trace: bool = False,
) -> RolloutCounts:
    """Run n seeded episodes and tally the outcome taxonomy."""
    if n < 1:
        raise ValueError("need n >= 1 rollouts")
    counts = RolloutCounts()
    for i in range(n):
        perts = [Perturbation.from_dict(p) for p in perturbations] if perturbations else None
        outcome = run_episode(
            task,
            policy,
            seed=seed + i,
            perturbations=perts,
            budget=budget,
            noise_std=noise_std,
            keep_trace=keep_trace,
        )
        counts.outcomes.append(outcome)
        if outcome.verdict == "Success":
            counts.success += 1
        elif outcome.verdict == "Recovered":
            counts.recovered += 1
        else:
            counts.failure += 1
    return counts
