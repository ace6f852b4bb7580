"""Per-step rewards, fall detection, and run-level fitness metrics.

All functions are pure over caller-supplied quantities. Distance deltas in
``StepRecord`` are already "previous minus current" (or the reverse for
escape), i.e. positive when the agent makes progress.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

from .constants import (
    BENEFICIAL_THRESHOLDS,
    FALL_FRACTION,
    FITNESS_WINDOW,
    GRAVITY,
    ITERATION_BUDGET,
    SPARSE_BONUS,
    W_AGENT_GOAL,
    W_AGENT_OBJECT,
    W_CTRL,
    W_ESCAPE,
    W_EXPLORE,
    W_FORWARD,
    W_OBJECT_GOAL,
)

AGENT_NEAR_OBJECT = "agent_near_object"
OBJECT_NEAR_GOAL = "object_near_goal"
GOAL_REACHED = "goal_reached"


class EmptyCurve(ValueError):
    pass


class NonPositiveReward(ValueError):
    """Cost of work is undefined for zero or negative reward."""


@dataclass(frozen=True)
class StepRecord:
    v_x: float = 0.0
    action: tuple[float, ...] = ()
    torque_abs_sum: float = 0.0
    d_ao_delta: float = 0.0
    d_og_delta: float = 0.0
    d_ag_delta: float = 0.0
    d_as_delta: float = 0.0
    explored_delta: int = 0
    head_height: float = 0.0
    proximity_events: frozenset[str] = frozenset()

    @property
    def action_sq(self) -> float:
        return float(sum(a * a for a in self.action))


@dataclass(frozen=True)
class LearningCurve:
    """Mean episode reward sampled along lifetime learning.

    ``progress`` is the forward-progress-only channel aligned with
    ``iterations``; it defaults to the reward channel.
    """

    iterations: tuple[int, ...]
    rewards: tuple[float, ...]
    total_iterations: int = ITERATION_BUDGET
    progress: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.iterations:
            raise EmptyCurve("learning curve has no samples")
        if len(self.iterations) != len(self.rewards):
            raise ValueError("iterations and rewards differ in length")
        if self.progress is not None and len(self.progress) != len(self.iterations):
            raise ValueError("progress channel misaligned with iterations")
        if any(b <= a for a, b in zip(self.iterations, self.iterations[1:])):
            raise ValueError("iterations must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "iterations": list(self.iterations),
            "rewards": list(self.rewards),
            "progress": None if self.progress is None else list(self.progress),
            "total_iterations": self.total_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> LearningCurve:
        return cls(
            tuple(int(i) for i in d["iterations"]),
            tuple(float(r) for r in d["rewards"]),
            int(d["total_iterations"]),
            None if d.get("progress") is None else tuple(float(p) for p in d["progress"]),
        )


@dataclass(frozen=True)
class FitnessReport:
    fitness: float
    forward_progress: float
    energy: float = 0.0
    cow: float | None = None
    passively_stable: bool = False
    dynamically_stable: bool | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "fitness": self.fitness,
            "forward_progress": self.forward_progress,
            "energy": self.energy,
            "cow": self.cow,
            "passively_stable": self.passively_stable,
            "dynamically_stable": self.dynamically_stable,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FitnessReport:
        return cls(
            float(d["fitness"]),
            float(d["forward_progress"]),
            float(d["energy"]),
            None if d["cow"] is None else float(d["cow"]),
            bool(d["passively_stable"]),
            d["dynamically_stable"],
            dict(d.get("extras") or {}),
        )


def reward_locomotion(s: StepRecord) -> float:
    return W_FORWARD * s.v_x - W_CTRL * s.action_sq


def reward_manipulation(s: StepRecord, fired: set[str] | None = None) -> float:
    """Dense approach/push terms plus one-off proximity bonuses.

    ``fired`` is the episode's latch: bonuses already in it pay nothing and
    newly paid ones are added. Without a latch every flagged event pays.
    """
    r = W_AGENT_OBJECT * s.d_ao_delta + W_OBJECT_GOAL * s.d_og_delta - W_CTRL * s.action_sq
    for event in (AGENT_NEAR_OBJECT, OBJECT_NEAR_GOAL):
        if event not in s.proximity_events:
            continue
        if fired is not None:
            if event in fired:
                continue
            fired.add(event)
        r += SPARSE_BONUS
    return r


TASKS = (
    "Patrol", "PointNav", "Exploration", "Escape",
    "Obstacle", "Incline", "PushBoxIncline", "ManipulateBall",
)


def reward_task(s: StepRecord, task: str, fired: set[str] | None = None) -> float:
    penalty = W_CTRL * s.action_sq
    if task in ("Patrol", "PointNav"):
        bonus = SPARSE_BONUS if GOAL_REACHED in s.proximity_events else 0.0
        return W_AGENT_GOAL * s.d_ag_delta - penalty + bonus
    if task == "Exploration":
        return W_EXPLORE * s.explored_delta - penalty
    if task == "Escape":
        return W_ESCAPE * s.d_as_delta - penalty
    if task in ("Obstacle", "Incline"):
        return reward_locomotion(s)
    if task in ("PushBoxIncline", "ManipulateBall"):
        return reward_manipulation(s, fired)
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def early_termination(head_height: float, initial_head_height: float) -> bool:
    """True once the head drops strictly below half its starting height."""
    return head_height < FALL_FRACTION * initial_head_height


def cost_of_work(energy: float, mass: float, reward: float, g: float = GRAVITY) -> float:
    if mass <= 0:
        raise ValueError("mass must be positive")
    if reward <= 0:
        raise NonPositiveReward(f"reward {reward} is not positive")
    return energy / (mass * g * reward)


def _window_mean(iterations, values, total: int, window: int) -> float:
    if total <= window:
        return math.fsum(values) / len(values)
    cutoff = total - window
    chosen = [v for i, v in zip(iterations, values) if i > cutoff]
    if not chosen:
        chosen = [values[-1]]
    return float(math.fsum(chosen) / len(chosen))


def fitness_from_curve(c: LearningCurve, window: int = FITNESS_WINDOW) -> tuple[float, float]:
    """(fitness, forward_progress): channel means over the final ``window`` iterations."""
    if not c.iterations:
        raise EmptyCurve("learning curve has no samples")
    fitness = _window_mean(c.iterations, c.rewards, c.total_iterations, window)
    progress = c.rewards if c.progress is None else c.progress
    return fitness, _window_mean(c.iterations, progress, c.total_iterations, window)


def beneficial_mutation(
    parent_fitness: float,
    child_fitness: float,
    env: str,
    thresholds: dict[str, float] | None = None,
) -> bool:
    table = BENEFICIAL_THRESHOLDS if thresholds is None else thresholds
    return child_fitness - parent_fitness >= table[env]


def baldwin_iterations(c: LearningCurve, criterion: float) -> int | None:
    """First sampled iteration whose reward reaches ``criterion``; None if never."""
    if not c.iterations:
        raise EmptyCurve("learning curve has no samples")
    for it, r in zip(c.iterations, c.rewards):
        if r >= criterion:
            return it
    return None


def percentile(values: Sequence[float], p: float) -> float:
    """Nearest-rank percentile: the ceil(p*n)-th smallest value."""
    if not len(values):
        raise ValueError("percentile of an empty list")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    ordered = sorted(values)
    # small slack keeps products like 0.7 * 10 from rounding up a rank
    rank = max(1, math.ceil(p * len(ordered) - 1e-9))
    return ordered[rank - 1]
