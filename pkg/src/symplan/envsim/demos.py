"""Demonstration episodes: goal-reaching label sequences with rendered frames.

An episode expands a randomly ordered (precedence-respecting) plan into
per-frame observations and labels: manipulation actions get an approach
prefix, idle gaps are labeled with the no-action symbol, and manipulation
episodes end with a terminal run. Episode lengths are rejection-sampled
into the per-task frame band.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..embedder import render_observation
from ..ioutil import atomic_write_json, atomic_write_text
from ..symbols import compact_encode
from .motion import exponential_path, motion_view, resolve_motion
from .states import WorldState, state_from_dict
from .tasks import ACTION_TARGET, TaskSpec, apply, get_task, goal_reached, oracle_action

GENERATOR_VERSION = 1
FRAME_RATE = 10.0

# Durations, in frames. Actions vary freely; the idle and approach spans
# are kept short and regular so the timing of every label switch is
# recoverable from a sliding window (an idle period longer than the window
# would leave the model unable to tell when the next action is due, which
# stalls closed-loop execution). The gap jitter matters: at a gap's
# expiry the follow-up action can be genuinely ambiguous (fetch the cup or
# the ball first), and as long as the maximum gap length has not elapsed,
# "still idle" stays the best guess until the follow-up is visible, so a
# wrong guess cannot insert a phantom run into the compact sequence.
# Approaches, by contrast, have exactly one follow-up (their action), so
# a fixed duration makes that handover perfectly timeable; any jitter there
# invites anticipate-and-revert oscillation.
APPROACH_LEN = 12
ACTION_FRAMES = (20, 80)
GAP_FRAMES = (7, 9)
# Matches the default model window: the warm-up idle fills one window
# exactly, so "a full window of stillness" always reads "first action due".
LEAD_GAP_LEN = 20

LENGTH_BANDS = {"manipulation": (90, 600), "blocks": (136, 445)}

_GAP = -1  # sentinel segment id


@dataclass
class Episode:
    """Time-indexed frames of (observation, label) plus generation metadata."""

    task_id: str
    times: np.ndarray
    obs: np.ndarray
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_frames(self) -> int:
        return len(self.labels)

    def compact_labels(self) -> list[int]:
        return compact_encode(self.labels.tolist())

    def initial_state(self) -> WorldState:
        return state_from_dict(self.meta["initial_state"])

    def to_jsonl(self, path: str | Path) -> None:
        header = {
            "task": self.task_id,
            "n_frames": self.n_frames,
            **self.meta,
        }
        lines = [json.dumps(header, sort_keys=True)]
        for t, o, lab in zip(self.times, self.obs, self.labels):
            lines.append(
                json.dumps({"t": round(float(t), 6), "obs": [round(float(v), 6) for v in o], "label": int(lab)})
            )
        atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "Episode":
        with open(path) as fh:
            header = json.loads(fh.readline())
            times, obs, labels = [], [], []
            for line in fh:
                row = json.loads(line)
                times.append(row["t"])
                obs.append(row["obs"])
                labels.append(row["label"])
        task_id = header.pop("task")
        header.pop("n_frames", None)
        return cls(
            task_id=task_id,
            times=np.asarray(times, dtype=float),
            obs=np.asarray(obs, dtype=float),
            labels=np.asarray(labels, dtype=np.int64),
            meta=header,
        )


def _draw_segments(task: TaskSpec, state0: WorldState, rng: np.random.Generator, order: str) -> list[tuple[int, int]]:
    """One candidate plan as (symbol_id | gap sentinel, n_frames) segments.

    A no-action gap leads the episode and follows every completed action
    group; approaches sit directly against the action they serve.
    """
    alpha = task.alphabet
    segments: list[tuple[int, int]] = [(_GAP, LEAD_GAP_LEN)]
    state = state0.copy()
    while not goal_reached(state, task):
        sym = oracle_action(state, task, rng if order == "random" else None)
        glyph = alpha.glyph_of(sym)
        is_action = task.kind == "blocks" or glyph in ACTION_TARGET
        if is_action:
            segments.append((sym, int(rng.integers(ACTION_FRAMES[0], ACTION_FRAMES[1] + 1))))
        else:
            segments.append((sym, APPROACH_LEN))
        state = apply(state, sym)
        if is_action:
            segments.append((_GAP, int(rng.integers(GAP_FRAMES[0], GAP_FRAMES[1] + 1))))
    if task.kind == "manipulation":
        terminal = alpha.id_of("#")
        segments.append((terminal, int(rng.integers(ACTION_FRAMES[0], ACTION_FRAMES[1] + 1))))
    return segments


def sample_demonstration(
    task: TaskSpec | str,
    seed: int,
    *,
    noise_std: float = 0.05,
    order: str = "random",
    frame_rate: float = FRAME_RATE,
    max_attempts: int = 200,
) -> Episode:
    """Generate one goal-reaching episode for ``task``.

    ``order="random"`` picks a uniformly random precedence-respecting
    sub-task order; ``order="first"`` always takes the lowest symbol id
    (the executor oracle's tie-break, useful for equivalence checks).
    """
    if isinstance(task, str):
        task = get_task(task)
    if order not in ("random", "first"):
        raise ValueError(f"order must be 'random' or 'first', got {order!r}")
    rng = np.random.default_rng(seed)
    state0 = task.sample_initial_state(rng)
    lo, hi = LENGTH_BANDS[task.kind]

    for _ in range(max_attempts):
        segments = _draw_segments(task, state0, rng, order)
        total = sum(d for _, d in segments)
        if lo <= total <= hi:
            break
    else:
        raise RuntimeError(f"could not sample an episode within {lo}-{hi} frames for task {task.task_id}")

    no_action = task.alphabet.no_action_id
    obs_rows: list[np.ndarray] = []
    labels: list[int] = []
    state = state0.copy()
    for sym, dur in segments:
        if sym == _GAP:
            for _ in range(dur):
                obs_rows.append(render_observation(state, noise_std, rng))
                labels.append(no_action)
            continue
        spec = resolve_motion(state, sym)
        path = exponential_path(spec.start_point(state), spec.target, dur)
        for point in path:
            view = motion_view(state, spec, point)
            obs_rows.append(render_observation(view, noise_std, rng))
            labels.append(sym)
        state = apply(state, sym)

    n = len(labels)
    labels_arr = np.asarray(labels, dtype=np.int64)
    return Episode(
        task_id=task.task_id,
        times=np.arange(n, dtype=float) / frame_rate,
        obs=np.asarray(obs_rows, dtype=float),
        labels=labels_arr,
        meta={
            "seed": int(seed),
            "version": GENERATOR_VERSION,
            "frame_rate": frame_rate,
            "noise_std": noise_std,
            "initial_state": state0.to_dict(),
            "plan": compact_encode(labels_arr.tolist()),
        },
    )


def replay_compact_plan(episode: Episode, task: TaskSpec | None = None) -> WorldState:
    """Re-run the episode's compact labels through ``apply`` from its initial
    state; raises if any precondition fails, returns the final state."""
    if task is None:
        task = get_task(episode.task_id)
    state = episode.initial_state()
    no_action = task.alphabet.no_action_id
    for sym in episode.compact_labels():
        if sym == no_action:
            continue
        state = apply(state, sym)
    return state


def episode_seed(root_seed: int, index: int) -> int:
    return (root_seed * 1_000_003 + index) % (2**63)


def generate_dataset(
    task: TaskSpec | str,
    n_episodes: int,
    seed: int,
    out_dir: str | Path,
    *,
    noise_std: float = 0.05,
    frame_rate: float = FRAME_RATE,
) -> dict:
    """Write ``n_episodes`` episodes under ``out_dir`` in an 80-10-10 split.

    Episodes are generated from per-index seeds and partitioned by a seeded
    shuffle, so reruns with the same arguments are byte-identical.
    """
    if isinstance(task, str):
        task = get_task(task)
    if n_episodes < 10:
        raise ValueError(f"need at least 10 episodes for a split, got {n_episodes}")
    out_dir = Path(out_dir)

    n_val = max(1, n_episodes // 10)
    n_test = max(1, n_episodes // 10)
    perm = np.random.default_rng(seed).permutation(n_episodes)
    split_of = {}
    for rank, idx in enumerate(perm):
        if rank < n_test:
            split_of[int(idx)] = "test"
        elif rank < n_test + n_val:
            split_of[int(idx)] = "val"
        else:
            split_of[int(idx)] = "train"

    counts = {"train": 0, "val": 0, "test": 0}
    for i in range(n_episodes):
        ep = sample_demonstration(task, episode_seed(seed, i), noise_std=noise_std, frame_rate=frame_rate)
        split = split_of[i]
        counts[split] += 1
        ep.to_jsonl(out_dir / split / f"ep_{i:05d}.jsonl")

    manifest = {
        "task": task.task_id,
        "n_episodes": n_episodes,
        "seed": seed,
        "noise_std": noise_std,
        "frame_rate": frame_rate,
        "counts": counts,
        "version": GENERATOR_VERSION,
        "alphabet": json.loads(task.alphabet.to_json()),
    }
    atomic_write_json(out_dir / "manifest.json", manifest)
    return manifest


def load_split(data_dir: str | Path, split: str) -> list[Episode]:
    split_dir = Path(data_dir) / split
    if not split_dir.is_dir():
        raise FileNotFoundError(f"no {split!r} split under {data_dir}")
    return [Episode.from_jsonl(p) for p in sorted(split_dir.glob("*.jsonl"))]


def load_manifest(data_dir: str | Path) -> dict:
    path = Path(data_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest.json under {data_dir}")
    return json.loads(path.read_text())
