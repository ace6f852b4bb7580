"""Run configuration with every design-space and evolution constant as a default."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .constants import (
    ARENAS,
    BENEFICIAL_THRESHOLDS,
    ENVS,
    FITNESS_WINDOW,
    ITERATION_BUDGET,
    MAX_EVALUATIONS,
    MAX_LIMBS,
    MUTATION_RETRIES,
    POPULATION_SIZE,
    TERRAIN_RESOLUTION,
    TOURNAMENT_SIZE,
)
from .mutation import MutationOp

# settings that change how a run executes but not what it computes
RUNTIME_FIELDS = frozenset(
    {"workers", "output_dir", "checkpoint_interval", "log_flush", "log_wall_clock", "max_evaluations"}
)
LOG_FLUSH_POLICIES = ("record", "fsync", "buffered")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    population_size: int = POPULATION_SIZE
    tournament_size: int = TOURNAMENT_SIZE
    max_evaluations: int = MAX_EVALUATIONS
    workers: int = 1
    run_seed: int = 0
    env: str = "FT"
    evaluator: dict = field(default_factory=lambda: {"name": "surrogate", "params": {}})
    mutation_weights: dict = field(default_factory=lambda: {op.value: 1.0 for op in MutationOp})
    mutation_retries: int = MUTATION_RETRIES
    initial_limb_range: tuple = (3, MAX_LIMBS)
    iteration_budget: int = ITERATION_BUDGET
    fitness_window: int = FITNESS_WINDOW
    beneficial_thresholds: dict = field(default_factory=lambda: dict(BENEFICIAL_THRESHOLDS))
    arenas: dict = field(default_factory=lambda: {k: list(v) for k, v in ARENAS.items()})
    terrain_resolution: float = TERRAIN_RESOLUTION
    shared_eval_seed: bool = False
    output_dir: str = "runs"
    checkpoint_interval: int = 50
    log_flush: str = "record"
    log_wall_clock: bool = False

    def __post_init__(self):
        if self.population_size < 1:
            raise ConfigError("population_size", "must be at least 1")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigError("tournament_size", "must lie in [1, population_size]")
        if self.max_evaluations < 0:
            raise ConfigError("max_evaluations", "must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers", "must be at least 1")
        if self.env not in ENVS:
            raise ConfigError("env", f"must be one of {ENVS}")
        if not isinstance(self.evaluator, dict) or not isinstance(self.evaluator.get("name"), str):
            raise ConfigError("evaluator", "must be an object with a string 'name'")
        unknown = set(self.mutation_weights) - {op.value for op in MutationOp}
        if unknown:
            raise ConfigError("mutation_weights", f"unknown operator(s) {sorted(unknown)}")
        if any(w < 0 for w in self.mutation_weights.values()):
            raise ConfigError("mutation_weights", "weights must be non-negative")
        lo, hi = self.initial_limb_range
        if not 1 <= lo <= hi <= MAX_LIMBS:
            raise ConfigError("initial_limb_range", f"must satisfy 1 <= lo <= hi <= {MAX_LIMBS}")
        if self.fitness_window < 1 or self.iteration_budget < 1:
            raise ConfigError("fitness_window", "window and budget must be positive")
        if set(self.beneficial_thresholds) != set(ENVS):
            raise ConfigError("beneficial_thresholds", f"needs exactly the keys {ENVS}")
        if self.checkpoint_interval < 1:
            raise ConfigError("checkpoint_interval", "must be at least 1")
        if self.log_flush not in LOG_FLUSH_POLICIES:
            raise ConfigError("log_flush", f"must be one of {LOG_FLUSH_POLICIES}")

    @classmethod
    def desk(cls, **overrides) -> RunConfig:
        """Minutes-scale preset: 64 agents, 640 tournaments, 8 workers."""
        base = dict(population_size=64, tournament_size=4, max_evaluations=640, workers=8)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["initial_limb_range"] = list(self.initial_limb_range)
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def digest(self) -> str:
        """Hash of the settings that determine a run's results."""
        core = {k: v for k, v in self.to_dict().items() if k not in RUNTIME_FIELDS}
        text = json.dumps(core, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def with_overrides(self, **changes) -> RunConfig:
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunConfig:
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        defaults = cls()
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(key, "unknown field")
            kwargs[key] = _coerce(key, value, getattr(defaults, key))
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data)


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(key, f"expected an object, got {value!r}")
        if key == "beneficial_thresholds" and not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value.values()
        ):
            raise ConfigError(key, "thresholds must be numbers")
        if key == "mutation_weights" and not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value.values()
        ):
            raise ConfigError(key, "weights must be numbers")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or len(value) != len(default):
            raise ConfigError(key, f"expected a list of {len(default)} values, got {value!r}")
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(key, "expected integers")
        return tuple(value)
    return value
