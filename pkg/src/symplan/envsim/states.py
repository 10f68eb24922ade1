"""World-state types for the two task families.

Poses are 3-vectors in meters. Each state also carries the live geometry
the renderer needs: the end-effector (or moving block) pose, the pose the
active motion is driving toward, and which object is being carried. Slot
positions (where objects get placed by actions) are drawn once per episode
and stored on the state so transitions stay deterministic functions of the
state alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvariantViolation

# Manipulation workspace geometry. The cabinet sits behind a sliding door
# plane; the door handle travels along y when opened.
HOME_POSE = np.array([0.10, 0.0, 0.45])
TABLE_BOX = np.array([[0.20, -0.30, 0.03], [0.45, 0.30, 0.03]])
CABINET_BOX = np.array([[0.62, -0.22, 0.15], [0.85, 0.22, 0.35]])
DOOR_PLANE_X = 0.55
HANDLE_CLOSED = np.array([0.55, 0.00, 0.30])
HANDLE_OPEN = np.array([0.55, -0.40, 0.30])
STANDOFF = np.array([0.0, 0.0, 0.16])
RELEASE_OFFSET = np.array([0.0, 0.0, 0.04])

DOOR_STATES = ("closed", "open")
CUP_LOCS = ("cabinet", "table", "gripper")
BALL_LOCS = ("cabinet", "table", "in_cup", "gripper")
CARRY_STATES = ("none", "cup", "ball", "handle")

BLOCK_NAMES = ("blue", "red", "yellow", "green", "pink")
# Final arrangement: two stacks (green on yellow, pink on red) and blue alone.
BLOCK_TARGETS = {
    "blue": np.array([0.15, 0.00, 0.02]),
    "yellow": np.array([0.35, -0.15, 0.02]),
    "green": np.array([0.35, -0.15, 0.08]),
    "red": np.array([0.35, 0.15, 0.02]),
    "pink": np.array([0.35, 0.15, 0.08]),
}
BLOCKS_TABLE_BOX = np.array([[0.55, -0.35, 0.02], [0.90, 0.35, 0.02]])


def _uniform_in_box(rng: np.random.Generator, box: np.ndarray) -> np.ndarray:
    return rng.uniform(box[0], box[1])


def _as_pose(value) -> np.ndarray:
    pose = np.asarray(value, dtype=float)
    if pose.shape != (3,) or not np.all(np.isfinite(pose)):
        raise InvariantViolation(f"pose must be a finite 3-vector, got {value!r}")
    return pose


@dataclass
class ManipulationState:
    """Scene state for the cabinet / cup / ball task family."""

    door: str
    cup_loc: str
    ball_loc: str
    arm: str  # "default" or "at:<cup|ball|open|close>"
    ee: np.ndarray
    target: np.ndarray
    poses: dict[str, np.ndarray]
    slots: dict[str, np.ndarray]
    door_frac: float = 0.0
    carrying: str = "none"

    def copy(self) -> "ManipulationState":
        return ManipulationState(
            door=self.door,
            cup_loc=self.cup_loc,
            ball_loc=self.ball_loc,
            arm=self.arm,
            ee=self.ee.copy(),
            target=self.target.copy(),
            poses={k: v.copy() for k, v in self.poses.items()},
            slots={k: v.copy() for k, v in self.slots.items()},
            door_frac=self.door_frac,
            carrying=self.carrying,
        )

    def validate(self) -> None:
        if self.door not in DOOR_STATES:
            raise InvariantViolation(f"bad door state {self.door!r}")
        if self.cup_loc not in CUP_LOCS:
            raise InvariantViolation(f"bad cup_loc {self.cup_loc!r}")
        if self.ball_loc not in BALL_LOCS:
            raise InvariantViolation(f"bad ball_loc {self.ball_loc!r}")
        if self.carrying not in CARRY_STATES:
            raise InvariantViolation(f"bad carrying flag {self.carrying!r}")
        if self.ball_loc == "in_cup" and self.cup_loc not in ("table", "cabinet"):
            raise InvariantViolation("ball rides with the cup: ball in_cup requires cup on table or in cabinet")
        if self.cup_loc == "gripper" and self.ball_loc == "gripper":
            raise InvariantViolation("at most one object in the gripper")
        if not 0.0 <= self.door_frac <= 1.0:
            raise InvariantViolation(f"door_frac out of range: {self.door_frac}")
        for name in ("cup", "ball"):
            _as_pose(self.poses[name])
        _as_pose(self.ee)
        _as_pose(self.target)

    def handle_pose(self) -> np.ndarray:
        """Current door-handle position, interpolated along the slide."""
        return HANDLE_CLOSED + self.door_frac * (HANDLE_OPEN - HANDLE_CLOSED)

    def feature_vector(self) -> np.ndarray:
        """Noise-free observation features; fixed 24-dim layout."""
        feats = np.zeros(24)
        feats[0] = self.door_frac
        feats[1:4] = self.poses["cup"]
        feats[4:7] = self.poses["ball"]
        feats[7:10] = self.ee
        feats[10:13] = self.target
        feats[13 + CUP_LOCS.index(self.cup_loc)] = 1.0
        feats[16 + BALL_LOCS.index(self.ball_loc)] = 1.0
        feats[20 + CARRY_STATES.index(self.carrying)] = 1.0
        return feats

    def to_dict(self) -> dict:
        return {
            "kind": "manipulation",
            "door": self.door,
            "door_frac": self.door_frac,
            "cup_loc": self.cup_loc,
            "ball_loc": self.ball_loc,
            "arm": self.arm,
            "carrying": self.carrying,
            "ee": self.ee.tolist(),
            "target": self.target.tolist(),
            "poses": {k: v.tolist() for k, v in self.poses.items()},
            "slots": {k: v.tolist() for k, v in self.slots.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ManipulationState":
        state = cls(
            door=data["door"],
            cup_loc=data["cup_loc"],
            ball_loc=data["ball_loc"],
            arm=data["arm"],
            ee=_as_pose(data["ee"]),
            target=_as_pose(data["target"]),
            poses={k: _as_pose(v) for k, v in data["poses"].items()},
            slots={k: _as_pose(v) for k, v in data["slots"].items()},
            door_frac=float(data.get("door_frac", 0.0)),
            carrying=data.get("carrying", "none"),
        )
        state.validate()
        return state

    @classmethod
    def sample(
        cls,
        rng: np.random.Generator,
        door: str,
        cup_loc: str,
        ball_loc: str,
    ) -> "ManipulationState":
        """Draw object poses for the given symbolic configuration."""
        # Objects stay well separated (several noise sigmas) so which one
        # the arm reaches for is never ambiguous in a rendered frame.
        # Table-located objects sit on their table slot, so every table
        # position comes from the same separated set.
        min_sep = 0.18
        slots = {
            "cup_table": _uniform_in_box(rng, TABLE_BOX),
            "ball_table": _uniform_in_box(rng, TABLE_BOX),
            "cup_cabinet": _uniform_in_box(rng, CABINET_BOX),
        }
        while np.linalg.norm(slots["cup_table"] - slots["ball_table"]) < min_sep:
            slots["ball_table"] = _uniform_in_box(rng, TABLE_BOX)
        poses = {
            "cup": _uniform_in_box(rng, CABINET_BOX) if cup_loc == "cabinet" else slots["cup_table"].copy(),
            "ball": _uniform_in_box(rng, CABINET_BOX) if ball_loc == "cabinet" else slots["ball_table"].copy(),
        }
        # only the both-in-cabinet draw can collide; the boxes are disjoint
        while ball_loc == "cabinet" and np.linalg.norm(poses["cup"] - poses["ball"]) < min_sep:
            poses["ball"] = _uniform_in_box(rng, CABINET_BOX)
        state = cls(
            door=door,
            cup_loc=cup_loc,
            ball_loc=ball_loc,
            arm="default",
            ee=HOME_POSE.copy(),
            target=HOME_POSE.copy(),
            poses=poses,
            slots=slots,
            door_frac=1.0 if door == "open" else 0.0,
        )
        state.validate()
        return state


@dataclass
class BlocksState:
    """Scene state for the five-block stacking task."""

    placed: dict[str, bool]
    poses: dict[str, np.ndarray]
    moving: str | None = None
    target: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "BlocksState":
        return BlocksState(
            placed=dict(self.placed),
            poses={k: v.copy() for k, v in self.poses.items()},
            moving=self.moving,
            target=self.target.copy(),
        )

    def validate(self) -> None:
        for name in BLOCK_NAMES:
            if name not in self.placed or name not in self.poses:
                raise InvariantViolation(f"missing block {name!r}")
            _as_pose(self.poses[name])
        if self.placed["green"] and not self.placed["yellow"]:
            raise InvariantViolation("green may only be placed after yellow")
        if self.placed["pink"] and not self.placed["red"]:
            raise InvariantViolation("pink may only be placed after red")
        if self.moving is not None and self.moving not in BLOCK_NAMES:
            raise InvariantViolation(f"bad moving block {self.moving!r}")
        _as_pose(self.target)

    def feature_vector(self) -> np.ndarray:
        """Noise-free observation features; fixed 24-dim layout."""
        feats = np.zeros(24)
        for i, name in enumerate(BLOCK_NAMES):
            feats[i] = 1.0 if self.placed[name] else 0.0
            feats[5 + 3 * i : 8 + 3 * i] = self.poses[name]
        feats[20:23] = self.target
        feats[23] = sum(self.placed.values()) / len(BLOCK_NAMES)
        return feats

    def to_dict(self) -> dict:
        return {
            "kind": "blocks",
            "placed": dict(self.placed),
            "poses": {k: v.tolist() for k, v in self.poses.items()},
            "moving": self.moving,
            "target": self.target.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BlocksState":
        state = cls(
            placed={k: bool(v) for k, v in data["placed"].items()},
            poses={k: _as_pose(v) for k, v in data["poses"].items()},
            moving=data.get("moving"),
            target=_as_pose(data.get("target", [0.0, 0.0, 0.0])),
        )
        state.validate()
        return state

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "BlocksState":
        poses: dict[str, np.ndarray] = {}
        for name in BLOCK_NAMES:
            pose = _uniform_in_box(rng, BLOCKS_TABLE_BOX)
            while any(np.linalg.norm(pose - p) < 0.07 for p in poses.values()):
                pose = _uniform_in_box(rng, BLOCKS_TABLE_BOX)
            poses[name] = pose
        state = cls(placed={name: False for name in BLOCK_NAMES}, poses=poses)
        state.validate()
        return state


WorldState = ManipulationState | BlocksState


def state_from_dict(data: dict) -> WorldState:
    kind = data.get("kind")
    if kind == "manipulation":
        return ManipulationState.from_dict(data)
    if kind == "blocks":
        return BlocksState.from_dict(data)
    raise ValueError(f"unknown state kind {kind!r}")
