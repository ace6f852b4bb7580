"""Asynchronous tournament evolution over a shared population store.

Workers repeatedly draw a tournament ticket, sample ``T`` alive members,
mutate the one with the most forward progress, evaluate the child outside
any lock, and commit it. Each commit evicts the oldest alive member. Every
ticket owns a random stream derived from ``(run_seed, ticket)``, so a
single-worker run is reproducible from its seed, and so is a resumed one.
"""

from __future__ import annotations

import threading
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import geometry
from .config import RunConfig
from .evaluators import Evaluation, FitnessEvaluator, make_evaluator
from .metrics import FitnessReport, cost_of_work, fitness_from_curve
from .morphology import Morphology
from .mutation import RetriesExhausted, mutate_with_redraws, sample_initial_morphology
from .population import Individual, PopulationStore
from .rng import Stream, derive_seed
from .runlog import Checkpoint, RunLog, RunLogWriter, load_checkpoint, make_header, save_checkpoint


class UniquenessExhausted(RuntimeError):
    """Could not draw enough distinct founder genotypes."""


@dataclass(frozen=True)
class Void:
    """A tournament that produced no child."""

    ticket: int | None
    parent_id: int | None
    reason: str

    def to_record(self) -> dict:
        return {"ticket": self.ticket, "parent_id": self.parent_id, "reason": self.reason}


def evaluator_from_config(cfg: RunConfig) -> FitnessEvaluator:
    params = dict(cfg.evaluator.get("params") or {})
    base = cfg.evaluator["name"].removeprefix("flaky-")
    if base == "surrogate":
        params.setdefault("budget", cfg.iteration_budget)
    return make_evaluator(cfg.evaluator["name"], params)


def eval_seed(cfg: RunConfig, *key) -> int:
    if cfg.shared_eval_seed:
        return derive_seed(cfg.run_seed, "eval")
    return derive_seed(cfg.run_seed, "eval", *key)


def fitness_report(m: Morphology, ev: Evaluation, cfg: RunConfig) -> FitnessReport:
    fitness, progress = fitness_from_curve(ev.curve, cfg.fitness_window)
    poses = geometry.limb_poses(m)
    stab = geometry.passive_stability(m, poses)
    mass = geometry.mass_properties(m, poses).total_mass
    cow = cost_of_work(ev.energy, mass, fitness) if fitness > 0 else None
    return FitnessReport(
        fitness,
        progress,
        ev.energy,
        cow,
        stab.stable,
        ev.dynamically_stable,
        {"stability_margin": stab.margin},
    )


def select_parent(members: list[Individual]) -> Individual:
    """Most forward progress; the younger member wins a tie."""
    return max(members, key=lambda ind: (ind.forward_progress, ind.birth_index))


def _evaluate(evaluator, m: Morphology, seed: int, env: str) -> tuple[Evaluation | None, str | None, float]:
    start = time.perf_counter()
    try:
        ev = evaluator.evaluate(m, seed, env)
    except Exception as exc:  # any evaluator failure voids the attempt
        return None, f"{type(exc).__name__}: {exc}", time.perf_counter() - start
    return ev, None, time.perf_counter() - start


def init_population(
    cfg: RunConfig,
    rng: Stream,
    evaluator: FitnessEvaluator,
    store: PopulationStore | None = None,
    on_commit: Callable[[Individual], None] | None = None,
    pool: ThreadPoolExecutor | None = None,
) -> PopulationStore:
    """Evaluate ``P`` distinct random founders and commit them in draw order.

    Founders whose evaluation fails are replaced by fresh draws.
    """
    P = cfg.population_size
    store = PopulationStore(P) if store is None else store
    seen: set[str] = set()
    draws = 0
    candidate = 0
    while len(store) < P:
        batch = []
        while len(batch) < P - len(store):
            if draws >= 100 * P:
                raise UniquenessExhausted(f"only {len(seen)} distinct founders after {draws} draws")
            draws += 1
            m = sample_initial_morphology(rng, tuple(cfg.initial_limb_range), cfg.mutation_retries)
            digest = m.digest()
            if digest in seen:
                continue
            seen.add(digest)
            batch.append((m, eval_seed(cfg, "founder", candidate)))
            candidate += 1
        jobs = [(evaluator, m, seed, cfg.env) for m, seed in batch]
        if pool is not None and len(jobs) > 1:
            results = list(pool.map(lambda job: _evaluate(*job), jobs))
        else:
            results = [_evaluate(*job) for job in jobs]
        for (m, seed), (ev, _err, elapsed) in zip(batch, results):
            if ev is None:
                continue
            report = fitness_report(m, ev, cfg)
            clock = elapsed if cfg.log_wall_clock else None

            def build(birth, evicted, alive_after, m=m, seed=seed, ev=ev, report=report, clock=clock):
                return Individual(
                    id=birth, birth_index=birth, morphology=m, fitness_report=report,
                    curve=ev.curve, parent_id=None, lineage_id=birth, eval_seed=seed,
                    alive_size=alive_after, wall_clock=clock,
                )

            store.commit(build, on_commit)
    return store


def run_tournament(
    store: PopulationStore,
    cfg: RunConfig,
    rng: Stream,
    evaluator: FitnessEvaluator,
    *,
    ticket: int | None = None,
    seed: int | None = None,
    on_commit: Callable[[Individual], None] | None = None,
) -> Individual | Void:
    """One select, mutate, evaluate, commit cycle."""
    selected_at, alive = store.snapshot()
    if not alive:
        raise RuntimeError("population is not initialized")
    members = rng.sample(alive, min(cfg.tournament_size, len(alive)))
    parent = select_parent(members)
    try:
        outcome = mutate_with_redraws(parent.morphology, rng, cfg.mutation_weights, cfg.mutation_retries)
    except RetriesExhausted as exc:
        return Void(ticket, parent.id, f"mutation: {exc}")
    if seed is None:
        seed = eval_seed(cfg, "ticket", ticket) if ticket is not None else rng.randbits(63)
    # fresh controller: only the genotype crosses generations
    ev, err, elapsed = _evaluate(evaluator, outcome.child, seed, cfg.env)
    if ev is None:
        return Void(ticket, parent.id, f"evaluation: {err}")
    report = fitness_report(outcome.child, ev, cfg)
    clock = elapsed if cfg.log_wall_clock else None

    def build(birth, evicted, alive_after):
        return Individual(
            id=birth, birth_index=birth, morphology=outcome.child, fitness_report=report,
            curve=ev.curve, parent_id=parent.id, lineage_id=parent.lineage_id, eval_seed=seed,
            op=outcome.op.value, tournament=tuple(m.id for m in members), selected_at=selected_at,
            evicted_id=None if evicted is None else evicted.id, alive_size=alive_after,
            ticket=ticket, wall_clock=clock,
        )

    return store.commit(build, on_commit)


class _Tickets:
    """Hands out tournament tickets until enough children are committed."""

    def __init__(self, target: int, committed: int, next_ticket: int):
        self.lock = threading.Lock()
        self.target = target
        self.committed = committed
        self.inflight = 0
        self.next_ticket = next_ticket
        self.stopped = False

    def acquire(self) -> int | None:
        with self.lock:
            if self.stopped or self.committed + self.inflight >= self.target:
                return None
            t = self.next_ticket
            self.next_ticket += 1
            self.inflight += 1
            return t

    def release(self, committed: bool) -> None:
        with self.lock:
            self.inflight -= 1
            self.committed += committed

    def stop(self) -> None:
        with self.lock:
            self.stopped = True


def run(
    cfg: RunConfig,
    evaluator: FitnessEvaluator | None = None,
    log_path=None,
    checkpoint_path=None,
    resume: bool = False,
    force: bool = False,
    progress: Callable[[Individual | Void], object] | None = None,
) -> RunLog:
    """Evolve until ``max_evaluations`` children have been committed.

    ``progress`` sees every committed individual and every void; returning
    ``False`` from it stops the run cleanly after in-flight work finishes.
    With ``resume`` the run continues from ``checkpoint_path`` and the log
    is truncated to the checkpoint's boundary first.
    """
    evaluator = evaluator_from_config(cfg) if evaluator is None else evaluator
    P = cfg.population_size
    header = make_header(cfg)
    ckpt: Checkpoint | None = None
    if resume:
        if checkpoint_path is None or not Path(checkpoint_path).exists():
            raise FileNotFoundError(f"no checkpoint to resume from at {checkpoint_path}")
        ckpt = load_checkpoint(checkpoint_path, cfg, force)
        if force:
            header = {**header, "config_digest": ckpt.config_digest}
    writer = None
    if log_path is not None:
        offset = None if ckpt is None else ckpt.log_offset
        writer = RunLogWriter(log_path, header, cfg.log_flush, resume_offset=offset)
    store = PopulationStore(P, None if ckpt is None else ckpt.archive)
    voids: list[Void] = []
    void_lock = threading.Lock()
    commits_since_ckpt = 0
    tickets = _Tickets(
        cfg.max_evaluations,
        0 if ckpt is None else max(0, len(ckpt.archive) - P),
        0 if ckpt is None else ckpt.next_ticket,
    )
    void_count = [0 if ckpt is None else ckpt.void_count]

    def checkpoint(archive: list[Individual]) -> None:
        # caller holds the store lock, so the archive is stable
        if checkpoint_path is None:
            return
        offset = None
        if writer is not None:
            writer.sync()
            offset = writer.offset
        save_checkpoint(
            checkpoint_path,
            Checkpoint(header["config_digest"], cfg.to_dict(), list(archive), tickets.next_ticket, offset, void_count[0]),
        )

    def on_commit(ind: Individual) -> None:
        nonlocal commits_since_ckpt
        if writer is not None:
            writer.write_individual(ind)
        if ind.parent_id is not None:
            commits_since_ckpt += 1
            if commits_since_ckpt >= cfg.checkpoint_interval:
                commits_since_ckpt = 0
                checkpoint(store._archive)

    def notify(event) -> None:
        if progress is not None and progress(event) is False:
            tickets.stop()

    def worker() -> None:
        while True:
            ticket = tickets.acquire()
            if ticket is None:
                return
            rng = Stream(derive_seed(cfg.run_seed, "tournament", ticket))
            try:
                result = run_tournament(store, cfg, rng, evaluator, ticket=ticket, on_commit=on_commit)
            except BaseException:
                tickets.release(False)
                tickets.stop()
                raise
            if isinstance(result, Void):
                with void_lock:
                    voids.append(result)
                    void_count[0] += 1
                if writer is not None:
                    writer.write_void(result.to_record())
            tickets.release(not isinstance(result, Void))
            notify(result)

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            if len(store) < P:
                founder_rng = Stream(derive_seed(cfg.run_seed, "init"))
                init_population(cfg, founder_rng, evaluator, store, on_commit, pool)
                for ind in store.archive:
                    notify(ind)
                with store.hold() as archive:
                    checkpoint(archive)
            futures = [pool.submit(worker) for _ in range(cfg.workers)]
            for f in futures:
                f.result()
        with store.hold() as archive:
            checkpoint(archive)
    finally:
        if writer is not None:
            writer.close()
    return RunLog(header, store.archive, [v.to_record() | {"type": "void"} for v in voids])


def audit_run(individuals: list[Individual], population_size: int) -> list[str]:
    """Post-hoc engine invariants; returns human-readable violations."""
    P = population_size
    problems: list[str] = []
    by_id = {}
    for pos, ind in enumerate(individuals):
        if ind.birth_index != pos or ind.id != pos:
            problems.append(f"record {pos}: birth_index/id {ind.birth_index}/{ind.id} leaves a gap")
        by_id[ind.id] = ind
    for pos, ind in enumerate(individuals):
        if pos < P:
            if ind.parent_id is not None or ind.lineage_id != ind.id:
                problems.append(f"founder {ind.id} has a parent or foreign lineage")
            continue
        if ind.parent_id is None:
            problems.append(f"individual {ind.id} after initialization has no parent")
            continue
        if ind.evicted_id != pos - P:
            problems.append(f"individual {ind.id} evicted {ind.evicted_id}, oldest alive was {pos - P}")
        if ind.alive_size != P:
            problems.append(f"individual {ind.id}: alive size {ind.alive_size} != {P}")
        members = ind.tournament or ()
        if len(set(members)) != len(members) or not members:
            problems.append(f"individual {ind.id}: tournament members not distinct")
            continue
        sel = ind.selected_at
        if sel is None or not P <= sel <= pos:
            problems.append(f"individual {ind.id}: bad selection time {sel}")
            continue
        window = range(sel - P, sel)
        if any(mid not in window for mid in members):
            problems.append(f"individual {ind.id}: tournament member not alive at selection")
        if ind.parent_id not in members:
            problems.append(f"individual {ind.id}: parent not among tournament members")
            continue
        best = select_parent([by_id[mid] for mid in members])
        if best.id != ind.parent_id:
            problems.append(f"individual {ind.id}: parent {ind.parent_id} is not the argmax ({best.id})")
        if ind.lineage_id != by_id[ind.parent_id].lineage_id:
            problems.append(f"individual {ind.id}: lineage differs from parent's")
    return problems
