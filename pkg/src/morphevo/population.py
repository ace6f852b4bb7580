"""Evaluated individuals and the shared population store.

The store keeps the full archive in birth order; the alive population is
always its newest ``size`` members, so inserting a child implicitly evicts
the oldest alive member.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any

from .metrics import FitnessReport, LearningCurve
from .morphology import Morphology


@dataclass(frozen=True)
class Individual:
    id: int
    birth_index: int
    morphology: Morphology
    fitness_report: FitnessReport
    curve: LearningCurve
    parent_id: int | None
    lineage_id: int
    eval_seed: int
    op: str | None = None
    tournament: tuple[int, ...] | None = None
    selected_at: int | None = None
    evicted_id: int | None = None
    alive_size: int | None = None
    ticket: int | None = None
    wall_clock: float | None = None

    @property
    def fitness(self) -> float:
        return self.fitness_report.fitness

    @property
    def forward_progress(self) -> float:
        return self.fitness_report.forward_progress

    @property
    def is_founder(self) -> bool:
        return self.parent_id is None

    def to_record(self) -> dict[str, Any]:
        rec = {
            "type": "individual",
            "id": self.id,
            "birth_index": self.birth_index,
            "parent_id": self.parent_id,
            "lineage_id": self.lineage_id,
            "op": self.op,
            "eval_seed": self.eval_seed,
            "tournament": None if self.tournament is None else list(self.tournament),
            "selected_at": self.selected_at,
            "evicted_id": self.evicted_id,
            "alive_size": self.alive_size,
            "ticket": self.ticket,
            "morphology": self.morphology.to_dict(),
            "curve": self.curve.to_dict(),
            "fitness_report": self.fitness_report.to_dict(),
        }
        if self.wall_clock is not None:
            rec["wall_clock"] = self.wall_clock
        return rec

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> Individual:
        tournament = rec.get("tournament")
        return cls(
            id=int(rec["id"]),
            birth_index=int(rec["birth_index"]),
            morphology=Morphology.from_dict(rec["morphology"]),
            fitness_report=FitnessReport.from_dict(rec["fitness_report"]),
            curve=LearningCurve.from_dict(rec["curve"]),
            parent_id=rec["parent_id"],
            lineage_id=int(rec["lineage_id"]),
            eval_seed=int(rec["eval_seed"]),
            op=rec.get("op"),
            tournament=None if tournament is None else tuple(tournament),
            selected_at=rec.get("selected_at"),
            evicted_id=rec.get("evicted_id"),
            alive_size=rec.get("alive_size"),
            ticket=rec.get("ticket"),
            wall_clock=rec.get("wall_clock"),
        )


class InvariantViolation(AssertionError):
    pass


class PopulationStore:
    """Thread-safe archive with an alive window of the newest ``size`` members.

    Readers take consistent snapshots; ``commit`` serializes birth-index
    allocation, insertion, eviction, and the ``on_commit`` sink.
    """

    def __init__(self, size: int, archive: list[Individual] | None = None):
        if size < 1:
            raise ValueError("population size must be at least 1")
        self.size = size
        self._archive: list[Individual] = list(archive or [])
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._archive)

    @property
    def archive(self) -> list[Individual]:
        with self._lock:
            return list(self._archive)

    @property
    def alive(self) -> list[Individual]:
        with self._lock:
            return self._archive[-self.size:]

    def snapshot(self) -> tuple[int, list[Individual]]:
        """(archive size, alive members oldest first) taken atomically."""
        with self._lock:
            return len(self._archive), self._archive[-self.size:]

    @contextmanager
    def hold(self) -> Iterator[list[Individual]]:
        """Block commits while the caller reads the archive in place."""
        with self._lock:
            yield self._archive

    def commit(
        self,
        build: Callable[[int, Individual | None, int], Individual],
        on_commit: Callable[[Individual], None] | None = None,
    ) -> Individual:
        """Insert the individual returned by ``build(birth_index, evicted, alive_after)``."""
        with self._lock:
            birth = len(self._archive)
            evicted = self._archive[birth - self.size] if birth >= self.size else None
            alive_after = min(birth + 1, self.size)
            ind = build(birth, evicted, alive_after)
            if ind.birth_index != birth:
                raise InvariantViolation("built individual has the wrong birth index")
            self._archive.append(ind)
            alive = self._archive[-self.size:]
            if evicted is not None and (len(alive) != self.size or alive[0].birth_index != evicted.birth_index + 1):
                raise InvariantViolation("alive window lost its size or eviction order")
            if on_commit is not None:
                on_commit(ind)
            return ind
