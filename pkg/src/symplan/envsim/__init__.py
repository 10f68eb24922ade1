"""Deterministic symbolic simulators for the two task families."""

from .demos import (
    Episode,
    generate_dataset,
    load_manifest,
    load_split,
    replay_compact_plan,
    sample_demonstration,
)
from .motion import COMPLETION_TOL, MotionSpec, exponential_path, motion_view, resolve_motion
from .states import BlocksState, ManipulationState, WorldState, state_from_dict
from .tasks import TASKS, TaskSpec, apply, get_task, goal_reached, legal_actions, oracle_action

__all__ = [
    "Episode",
    "generate_dataset",
    "load_manifest",
    "load_split",
    "replay_compact_plan",
    "sample_demonstration",
    "COMPLETION_TOL",
    "MotionSpec",
    "exponential_path",
    "motion_view",
    "resolve_motion",
    "BlocksState",
    "ManipulationState",
    "WorldState",
    "state_from_dict",
    "TASKS",
    "TaskSpec",
    "apply",
    "get_task",
    "goal_reached",
    "legal_actions",
    "oracle_action",
]
