"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL`` line with its wall time,
whatever the pytest capture mode.
"""

from __future__ import annotations

import json
import math
import os
import random
import signal
import subprocess
import sys
import time
import warnings
from contextlib import contextmanager

import numpy as np
import pytest

from morphevo import geometry
from morphevo.analytics import InsufficientData, build_phylogeny, muller_series, pearson
from morphevo.config import RunConfig
from morphevo.constants import DENSITIES, GEARS, JOINT_AXES, JOINT_LIMITS, LIMB_LENGTHS, PHIS, THETAS
from morphevo.evolution import audit_run, run
from morphevo.metrics import (
    LearningCurve,
    StepRecord,
    baldwin_iterations,
    beneficial_mutation,
    cost_of_work,
    percentile,
    reward_locomotion,
    reward_manipulation,
)
from morphevo.morphology import validate
from morphevo.mutation import mutate_with_redraws, sample_initial_morphology
from morphevo.rng import Stream
from morphevo.runlog import read_log
from morphevo.terrain import FLAT, HILLS, RUBBLE, STEPS, TerrainSpec, generate

from oracles import oracle_stable

pytestmark = pytest.mark.slow


@contextmanager
def criterion(capsys, number: int, title: str, budget_s: float):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"took {elapsed:.1f}s, budget {budget_s:.0f}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {status} {title} ({elapsed:.1f}s)")


def domain_violations(m) -> list[str]:
    bad = []
    if m.head_density not in DENSITIES:
        bad.append(f"head density {m.head_density}")
    for limb in m.limbs:
        p, j = limb.params, limb.joint
        if p.length not in LIMB_LENGTHS:
            bad.append(f"length {p.length}")
        if p.density not in DENSITIES:
            bad.append(f"density {p.density}")
        if p.theta not in THETAS:
            bad.append(f"theta {p.theta}")
        if p.phi not in PHIS:
            bad.append(f"phi {p.phi}")
        if p.radius != 0.05:
            bad.append(f"radius {p.radius}")
        if j.axes not in JOINT_AXES:
            bad.append(f"axes {j.axes}")
        if len(j.limits) != len(j.axes) or len(j.gears) != len(j.axes):
            bad.append("joint arity")
        bad += [f"limit {lim}" for lim in j.limits if tuple(lim) not in JOINT_LIMITS]
        bad += [f"gear {g}" for g in j.gears if g not in GEARS]
    return bad


def test_criterion_01_design_space(capsys):
    with criterion(capsys, 1, "design-space conformance over 10,000 mutations", 30):
        violations = []
        # 100 lineages of 100 chained mutations each
        for lineage in range(100):
            m = sample_initial_morphology(Stream(lineage), (1, 10))
            for step in range(100):
                m = mutate_with_redraws(m, Stream(lineage * 1000 + step)).child
                violations += domain_violations(m)
        assert violations == []


def test_criterion_02_mutation_closure(capsys):
    with criterion(capsys, 2, "mutation closure over 10,000 (parent, seed) pairs", 120):
        parents = [sample_initial_morphology(Stream(500_000 + k), (1, 10)) for k in range(1000)]
        failures = []
        for k in range(10_000):
            child = mutate_with_redraws(parents[k % 1000], Stream(7_000_000 + k)).child
            report = validate(child)
            com_y = abs(geometry.mass_properties(child).com[1])
            if not report.ok or com_y > 1e-6 or not 1 <= len(child) <= 10 or geometry.self_intersects(child):
                failures.append((k, str(report), com_y))
        assert failures == []


def sampled_segment_distance(p0, p1, q0, q1, samples=10_000):
    """Distance from 10^4 points along [p0, p1] to segment [q0, q1], minimised."""
    p0, p1, q0, q1 = (np.asarray(v, dtype=float) for v in (p0, p1, q0, q1))
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = p0 + t * (p1 - p0)
    d = q1 - q0
    u = np.clip(((pts - q0) @ d) / (d @ d), 0.0, 1.0)[:, None]
    return float(np.linalg.norm(pts - (q0 + u * d), axis=1).min())


def test_criterion_03_geometry_oracles(capsys):
    with criterion(capsys, 3, "capsule distance and stability match brute-force oracles", 120):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            p0, p1, q0, q1 = rng.uniform(-1, 1, (4, 3))
            ra, rb = rng.uniform(0.01, 0.1, 2)
            a, b = geometry.Capsule(tuple(p0), tuple(p1), ra), geometry.Capsule(tuple(q0), tuple(q1), rb)
            exact = geometry.capsule_distance(a, b)
            brute = min(sampled_segment_distance(p0, p1, q0, q1), sampled_segment_distance(q0, q1, p0, p1))
            worst = max(worst, abs(exact - (brute - ra - rb)))
        assert worst <= 1e-3

        disagreements = []
        stream = Stream(33)
        for k in range(1000):
            m = sample_initial_morphology(stream, (1, 10))
            res = geometry.passive_stability(m)
            com = geometry.mass_properties(m).com
            if res.stable != oracle_stable(res.contacts, com[:2]):
                disagreements.append(k)
        assert disagreements == []


def test_criterion_04_terrain(capsys):
    with criterion(capsys, 4, "terrain segment ranges over 100 VT generations", 30):
        problems = []
        kinds = set()
        for seed in range(100):
            segs, hf = generate(TerrainSpec("VT", seed=seed))
            row = hf.grid[0]
            xs = np.arange(row.size) * hf.resolution
            for s in segs:
                kinds.add(s.kind)
                if s.kind == FLAT and not 1.0 <= s.nominal_length <= 3.0:
                    problems.append((seed, "flat", s.nominal_length))
                if s.kind != FLAT and not 4.0 <= s.nominal_length <= 8.0:
                    problems.append((seed, "obstacle", s.nominal_length))
                if s.kind == HILLS and not 0.6 <= s.params["amplitude"] <= 1.2:
                    problems.append((seed, "amplitude", s.params["amplitude"]))
                if s.kind == RUBBLE and not all(0.2 <= h <= 0.3 for h in s.params["clip_heights"]):
                    problems.append((seed, "rubble", s.params["clip_heights"]))
                if s.kind == STEPS:
                    risers = s.risers()
                    if len(risers) != 8 or any(abs(abs(r) - 0.2) > 1e-9 for r in risers):
                        problems.append((seed, "risers", risers))
                    if not s.truncated:
                        # risers survive rasterization, counting the drop back to flat ground
                        mask = (xs >= s.start - hf.resolution) & (xs <= s.start + s.length + hf.resolution)
                        jumps = np.diff(row[mask])
                        jumps = jumps[np.abs(jumps) > 1e-9]
                        if len(jumps) != 8 or np.abs(np.abs(jumps) - 0.2).max() > 1e-9:
                            problems.append((seed, "raster risers", jumps.tolist()))
        assert problems == []
        assert kinds == {FLAT, HILLS, STEPS, RUBBLE}
        assert not generate(TerrainSpec("FT", seed=1))[1].grid.any()


def test_criterion_05_reward_spot_checks(capsys):
    with criterion(capsys, 5, "reward, cost-of-work and beneficial-mutation spot checks", 1):
        assert abs(reward_locomotion(StepRecord(v_x=2.0, action=(10.0,))) - 1.9) <= 1e-12
        assert abs(reward_locomotion(StepRecord(action=(10.0,) * 10)) + 1.0) <= 1e-12
        assert abs(reward_manipulation(StepRecord(d_ao_delta=0.05, d_og_delta=0.02)) - 7.0) <= 1e-12
        assert abs(cost_of_work(981, 10, 10) - 1.0) <= 1e-12
        assert beneficial_mutation(0.0, 300.0, "FT") and not beneficial_mutation(0.0, 299.9, "FT")
        for env in ("VT", "MVT"):
            assert beneficial_mutation(0.0, 100.0, env) and not beneficial_mutation(0.0, 99.9, env)


def check_engine(individuals, P, expected):
    assert len(individuals) == expected
    assert [i.birth_index for i in individuals] == list(range(expected))
    assert all(i.alive_size == P for i in individuals[P:])
    assert audit_run(individuals, P) == []


def test_criterion_06_concurrent_invariants(capsys):
    with criterion(capsys, 6, "engine invariants with 8 workers", 300):
        cfg = RunConfig.desk(run_seed=6)
        assert (cfg.population_size, cfg.tournament_size, cfg.workers, cfg.max_evaluations) == (64, 4, 8, 640)
        sizes = []
        log = run(cfg, progress=lambda ev: sizes.append(getattr(ev, "alive_size", None)))
        check_engine(log.individuals, 64, 704)
        assert sizes[64:] == [64] * 640


def test_criterion_07_determinism_and_resume(capsys, tmp_path):
    with criterion(capsys, 7, "byte-identical repeats and kill/resume", 300):
        cfg = RunConfig.desk(run_seed=7, workers=1)
        blobs = []
        for k in range(3):
            path = tmp_path / f"rep{k}.jsonl"
            run(cfg, log_path=path)
            blobs.append(path.read_bytes())
        assert blobs[0] == blobs[1] == blobs[2]

        conf = tmp_path / "desk.json"
        conf.write_text(json.dumps({**RunConfig.desk(run_seed=7).to_dict(), "checkpoint_interval": 25}))
        out = tmp_path / "runs"
        cmd = [sys.executable, "-m", "morphevo", "evolve", str(conf), "--output-dir", str(out), "--quiet"]
        log_path = out / "ft-seed7" / "run.jsonl"
        kill_at = random.Random(7).randint(100, 600)
        proc = subprocess.Popen(cmd, stdout=subprocess.DEVNULL)
        while proc.poll() is None:
            if log_path.exists() and log_path.read_bytes().count(b"\n") > kill_at:
                os.kill(proc.pid, signal.SIGKILL)
                break
            time.sleep(0.002)
        proc.wait()
        assert proc.returncode == -signal.SIGKILL, "run finished before it could be killed"
        assert len(read_log(log_path)) < 704
        ck = out / "ft-seed7" / "checkpoint.json"
        resumed = subprocess.run(cmd[:-3] + ["--resume", str(ck), "--quiet"], capture_output=True, text=True)
        assert resumed.returncode == 0, resumed.stderr
        check_engine(read_log(log_path).individuals, 64, 704)


def top_quartile_mean(individuals, criterion_value):
    ranked = sorted(individuals, key=lambda i: (-i.fitness, i.id))[: len(individuals) // 4]
    its = [baldwin_iterations(i.curve, criterion_value) for i in ranked]
    reached = [t for t in its if t is not None]
    return math.fsum(reached) / len(reached) if reached else math.inf


def test_criterion_08_baldwin_trend(capsys):
    with criterion(capsys, 8, "surrogate Baldwin trend in at least 4 of 5 seeds", 600):
        wins = 0
        for seed in range(5):
            log = run(RunConfig.desk(run_seed=seed, workers=1))
            founders = log.founders()
            crit = percentile([f.fitness for f in founders], 0.75)
            before = top_quartile_mean(founders, crit)
            after = top_quartile_mean(log.final_alive(), crit)
            wins += after < before
            with capsys.disabled():
                print(f"\n  seed {seed}: founders {before:,.0f} final {after:,.0f} iterations")
        assert wins >= 4


def test_criterion_09_analytics_conservation(capsys, desk_log):
    with criterion(capsys, 9, "Muller, phylogeny and Pearson conservation", 30):
        log, _ = desk_log
        series = muller_series(log)
        assert np.abs(series.column_sums() - 1.0).max() <= 1e-9
        tree = build_phylogeny(log)
        assert sum(tree.subtree_size(r) for r in tree.roots) == len(log)
        xs = [float(i) for i in range(20)]
        assert pearson(xs, [3.0 - 0.5 * x for x in xs])[0] == -1.0


def test_criterion_10_default_config(capsys):
    with criterion(capsys, 10, "print-default-config equals the published constants", 1):
        out = subprocess.run([sys.executable, "-m", "morphevo", "print-default-config"],
                             capture_output=True, text=True, check=True).stdout
        cfg = json.loads(out)
        assert cfg["population_size"] == 576
        assert cfg["tournament_size"] == 4
        assert cfg["iteration_budget"] == 5_000_000
        assert cfg["fitness_window"] == 100_000
        assert cfg["arenas"] == {"FT": [150.0, 150.0], "VT": [100.0, 100.0], "MVT": [60.0, 40.0]}
        assert cfg["beneficial_thresholds"] == {"FT": 300.0, "VT": 100.0, "MVT": 100.0}
