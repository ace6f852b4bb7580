"""Post-hoc analysis of run logs.

Everything here is a pure function of an immutable ``RunLog`` (or a list of
individuals). Bootstrap intervals use a fixed analysis seed so repeated
analyses of one log agree exactly.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter, defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .constants import BENEFICIAL_THRESHOLDS
from .metrics import baldwin_iterations, beneficial_mutation, percentile
from .morphology import dof_count
from .population import Individual
from .runlog import RunLog

ANALYSIS_SEED = 20_240_101
BOOTSTRAP_RESAMPLES = 1000
DESCRIPTOR_KEYS = ("extent_x", "extent_y", "extent_z", "coverage", "mass", "dof")


class MissingParent(ValueError):
    pass


class DegenerateVariance(ValueError):
    pass


class InsufficientData(UserWarning):
    pass


def _individuals(log: RunLog | Sequence[Individual]) -> list[Individual]:
    return list(log.individuals) if isinstance(log, RunLog) else list(log)


def generation_index(log: RunLog | Sequence[Individual]) -> dict[int, int]:
    """Edge depth of every individual below its founder."""
    gen: dict[int, int] = {}
    for ind in _individuals(log):
        if ind.parent_id is None:
            gen[ind.id] = 0
        elif ind.parent_id in gen:
            gen[ind.id] = gen[ind.parent_id] + 1
        else:
            raise MissingParent(f"individual {ind.id} references unknown parent {ind.parent_id}")
    return gen


def bootstrap_ci(values: Sequence[float], level: float = 0.95, resamples: int = BOOTSTRAP_RESAMPLES,
                 seed: int = ANALYSIS_SEED) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), float(x[0])
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    means = x[idx].mean(axis=1)
    alpha = (1.0 - level) / 2
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


# ---------------------------------------------------------------- phylogeny

@dataclass
class PhyloNode:
    id: int
    fitness: float
    generation: int
    children: list[int] = field(default_factory=list)
    descendants: int = 0


@dataclass
class Phylogeny:
    nodes: dict[int, PhyloNode]
    roots: list[int]

    def subtree_size(self, node_id: int) -> int:
        return self.nodes[node_id].descendants + 1

    def leaves(self) -> list[int]:
        return [n.id for n in self.nodes.values() if not n.children]

    def newick(self, root: int) -> str:
        # children always have larger ids, so reverse id order builds bottom-up
        members = self._subtree(root)
        text: dict[int, str] = {}
        for nid in sorted(members, reverse=True):
            node = self.nodes[nid]
            label = f"{nid}[&fitness={node.fitness!r}]"
            if node.children:
                text[nid] = "(" + ",".join(text.pop(c) for c in node.children) + ")" + label
            else:
                text[nid] = label
        return text[root] + ";"

    def to_newick(self) -> str:
        return "\n".join(self.newick(r) for r in self.roots) + "\n"

    def to_json(self) -> list[dict]:
        out: dict[int, dict] = {}
        for nid in sorted(self.nodes, reverse=True):
            node = self.nodes[nid]
            out[nid] = {
                "id": nid,
                "fitness": node.fitness,
                "generation": node.generation,
                "descendants": node.descendants,
                "children": [out.pop(c) for c in node.children],
            }
        return [out[r] for r in self.roots]

    def _subtree(self, root: int) -> list[int]:
        stack, seen = [root], []
        while stack:
            nid = stack.pop()
            seen.append(nid)
            stack.extend(self.nodes[nid].children)
        return seen


def build_phylogeny(log: RunLog | Sequence[Individual]) -> Phylogeny:
    inds = _individuals(log)
    gen = generation_index(inds)
    nodes = {ind.id: PhyloNode(ind.id, ind.fitness, gen[ind.id]) for ind in inds}
    roots = []
    for ind in inds:
        if ind.parent_id is None:
            roots.append(ind.id)
        else:
            nodes[ind.parent_id].children.append(ind.id)
    for ind in reversed(inds):
        if ind.parent_id is not None:
            nodes[ind.parent_id].descendants += nodes[ind.id].descendants + 1
    return Phylogeny(nodes, roots)


# ------------------------------------------------------------ muller series

def checkpoint_counts(n_records: int, population_size: int, checkpoints: int = 50) -> list[int]:
    """Evenly spaced archive sizes from a full founder set to the end."""
    start = min(population_size, n_records)
    if checkpoints <= 1 or n_records == start:
        return [n_records]
    pts = np.linspace(start, n_records, checkpoints)
    return sorted({int(round(p)) for p in pts})


@dataclass
class MullerSeries:
    birth_index: list[int]  # index of the newest member at each checkpoint
    lineages: list[int]
    abundance: np.ndarray  # (checkpoints, len(lineages))
    other: np.ndarray
    mean_fitness: np.ndarray  # nan where a lineage is absent

    def column_sums(self) -> np.ndarray:
        return self.abundance.sum(axis=1) + self.other


def muller_series(log: RunLog, top_k: int = 10, checkpoints: int = 50) -> MullerSeries:
    inds = log.individuals
    P = log.population_size
    counts = checkpoint_counts(len(inds), P, checkpoints)
    final = Counter(ind.lineage_id for ind in log.final_alive())
    founders = sorted({ind.lineage_id for ind in inds})
    ranked = sorted(founders, key=lambda lid: (-final.get(lid, 0), lid))
    keep = ranked[:top_k]
    col = {lid: j for j, lid in enumerate(keep)}
    ab = np.zeros((len(counts), len(keep)))
    fit = np.full((len(counts), len(keep)), np.nan)
    other = np.zeros(len(counts))
    for t, n in enumerate(counts):
        alive = log.alive_at(n)
        size = len(alive)
        sums: dict[int, list[float]] = defaultdict(list)
        for ind in alive:
            sums[ind.lineage_id].append(ind.fitness)
        for lid, fs in sums.items():
            if lid in col:
                ab[t, col[lid]] = len(fs) / size
                fit[t, col[lid]] = math.fsum(fs) / len(fs)
        other[t] = sum(len(fs) for lid, fs in sums.items() if lid not in col) / size
    return MullerSeries([n - 1 for n in counts], keep, ab, other, fit)


# ------------------------------------------------------------ lineage stats

@dataclass(frozen=True)
class LineageStats:
    lineage_id: int
    founder_fitness_rank: int
    final_abundance: float
    beneficial_mutation_count: int
    size: int


def _thresholds(log: RunLog) -> dict[str, float]:
    return log.header.get("config", {}).get("beneficial_thresholds", BENEFICIAL_THRESHOLDS)


def beneficial_edges(log: RunLog) -> list[tuple[int, int]]:
    by_id = log.by_id()
    table = _thresholds(log)
    edges = []
    for ind in log.individuals:
        if ind.parent_id is None:
            continue
        parent = by_id[ind.parent_id]
        if beneficial_mutation(parent.fitness, ind.fitness, log.env, table):
            edges.append((parent.id, ind.id))
    return edges


def lineage_stats(log: RunLog) -> list[LineageStats]:
    founders = log.founders()
    ranked = sorted(founders, key=lambda f: (-f.fitness, f.id))
    rank = {f.id: r for r, f in enumerate(ranked, start=1)}
    alive = log.final_alive()
    final = Counter(ind.lineage_id for ind in alive)
    size = Counter(ind.lineage_id for ind in log.individuals)
    by_id = log.by_id()
    beneficial = Counter(by_id[child].lineage_id for _, child in beneficial_edges(log))
    return [
        LineageStats(f.id, rank[f.id], final.get(f.id, 0) / len(alive), beneficial.get(f.id, 0), size[f.id])
        for f in founders
    ]


# ------------------------------------------------------------ baldwin curve

@dataclass(frozen=True)
class GenerationPoint:
    generation: int
    n: int
    mean: float
    ci_low: float
    ci_high: float
    not_reached: int


@dataclass
class BaldwinCurve:
    criterion: float
    points: list[GenerationPoint]
    not_reached: int
    insufficient: bool
    agents: int


def baldwin_curve(log: RunLog, criterion_percentile: float = 0.75, top_n: int = 100) -> BaldwinCurve:
    """Iterations-to-criterion of the fittest agents, grouped by generation.

    The criterion is a percentile of founder fitness. Agents that never
    reach it are excluded from the means and counted separately.
    """
    founders = log.founders()
    criterion = percentile([f.fitness for f in founders], criterion_percentile)
    gen = generation_index(log)
    ranked = sorted(log.individuals, key=lambda i: (-i.fitness, i.id))
    insufficient = len(ranked) < top_n
    if insufficient:
        warnings.warn(f"only {len(ranked)} agents available (wanted {top_n})", InsufficientData, stacklevel=2)
    top = ranked[:top_n]
    groups: dict[int, list[int]] = defaultdict(list)
    missing: Counter = Counter()
    for ind in top:
        it = baldwin_iterations(ind.curve, criterion)
        if it is None:
            missing[gen[ind.id]] += 1
        else:
            groups[gen[ind.id]].append(it)
    points = []
    for g in sorted(set(groups) | set(missing)):
        vals = groups.get(g, [])
        mean = math.fsum(vals) / len(vals) if vals else math.nan
        lo, hi = bootstrap_ci(vals)
        points.append(GenerationPoint(g, len(vals), mean, lo, hi, missing.get(g, 0)))
    return BaldwinCurve(criterion, points, sum(missing.values()), insufficient, len(top))


def founder_criterion(log: RunLog, p: float = 0.75) -> float:
    return percentile([f.fitness for f in log.founders()], p)


# ------------------------------------------------------- population trends

@dataclass
class Trend:
    birth_index: list[int]
    mean: dict[str, list[float]]
    ci_low: dict[str, list[float]]
    ci_high: dict[str, list[float]]


def descriptor_trends(log: RunLog, checkpoints: int = 50) -> Trend:
    cache: dict[int, dict[str, float]] = {}
    counts = checkpoint_counts(len(log), log.population_size, checkpoints)
    mean = {k: [] for k in DESCRIPTOR_KEYS}
    lo = {k: [] for k in DESCRIPTOR_KEYS}
    hi = {k: [] for k in DESCRIPTOR_KEYS}
    for n in counts:
        alive = log.alive_at(n)
        for ind in alive:
            if ind.id not in cache:
                cache[ind.id] = geometry.descriptors(ind.morphology)
        for k in DESCRIPTOR_KEYS:
            vals = [float(cache[ind.id][k]) for ind in alive]
            mean[k].append(math.fsum(vals) / len(vals))
            a, b = bootstrap_ci(vals)
            lo[k].append(a)
            hi[k].append(b)
    return Trend([n - 1 for n in counts], mean, lo, hi)


def stable_fraction(individuals: Iterable[Individual]) -> float:
    inds = list(individuals)
    if not inds:
        raise ValueError("empty population")
    return sum(1 for i in inds if i.fitness_report.passively_stable) / len(inds)


def stable_fraction_trend(log: RunLog, checkpoints: int = 50) -> tuple[list[int], list[float]]:
    counts = checkpoint_counts(len(log), log.population_size, checkpoints)
    return [n - 1 for n in counts], [stable_fraction(log.alive_at(n)) for n in counts]


# ---------------------------------------------------------- agent selection

def select_top_agents(logs: Sequence[RunLog], per_lineage: int = 3, final_n: int | None = None) -> list[Individual]:
    """Best members of every surviving lineage across runs, fittest first."""
    pool: list[tuple[Individual, str]] = []
    for log in logs:
        surviving = {ind.lineage_id for ind in log.final_alive()}
        members: dict[int, list[Individual]] = defaultdict(list)
        for ind in log.individuals:
            if ind.lineage_id in surviving:
                members[ind.lineage_id].append(ind)
        for group in members.values():
            group.sort(key=lambda i: (-i.fitness, i.id))
            pool.extend((ind, log.run_id) for ind in group[:per_lineage])
    # run id breaks ties so input order never matters
    pool.sort(key=lambda pair: (-pair[0].fitness, pair[1], pair[0].id))
    chosen = [ind for ind, _ in pool]
    return chosen if final_n is None else chosen[:final_n]


# -------------------------------------------------------------- correlation

def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r with a two-tailed p-value from Student's t (n - 2 dof)."""
    n = len(x)
    if n != len(y):
        raise ValueError("series differ in length")
    if n < 3:
        raise ValueError("need at least three points")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [a - mx for a in x]
    dy = [b - my for b in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise DegenerateVariance("a series is constant")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return r, 0.0
    from scipy import stats  # deferred: slow to import and only needed here

    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, float(2.0 * stats.t.sf(abs(t), n - 2))


@dataclass(frozen=True)
class Correlation:
    n: int
    r: float
    p: float
    baldwin_n: int | None = None
    baldwin_r: float | None = None
    baldwin_p: float | None = None


def fitness_cow_correlation(agents: Sequence[Individual], criterion: float | None = None) -> Correlation:
    """Fitness vs cost of work, and optionally iterations-to-criterion vs cost of work.

    Agents without a cost of work (non-positive fitness) are left out.
    """
    usable = [a for a in agents if a.fitness_report.cow is not None]
    r, p = pearson([a.fitness for a in usable], [a.fitness_report.cow for a in usable])
    if criterion is None:
        return Correlation(len(usable), r, p)
    pairs = [(baldwin_iterations(a.curve, criterion), a.fitness_report.cow) for a in usable]
    pairs = [(b, c) for b, c in pairs if b is not None]
    try:
        br, bp = pearson([float(b) for b, _ in pairs], [c for _, c in pairs])
    except (DegenerateVariance, ValueError):
        return Correlation(len(usable), r, p, len(pairs), None, None)
    return Correlation(len(usable), r, p, len(pairs), br, bp)


# ------------------------------------------------------------------ export

def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if isinstance(v, float) and math.isnan(v) else v for v in row])
    return path


def export_muller(series: MullerSeries, prefix) -> list[Path]:
    names = [f"lineage_{lid}" for lid in series.lineages]
    ab = write_csv(
        f"{prefix}_muller.csv",
        ["birth_index", *names, "other"],
        ([b, *series.abundance[t].tolist(), float(series.other[t])] for t, b in enumerate(series.birth_index)),
    )
    fit = write_csv(
        f"{prefix}_muller_fitness.csv",
        ["birth_index", *names],
        ([b, *series.mean_fitness[t].tolist()] for t, b in enumerate(series.birth_index)),
    )
    return [ab, fit]


def export_trend(trend: Trend, prefix) -> Path:
    header = ["birth_index"]
    for k in DESCRIPTOR_KEYS:
        header += [f"{k}_mean", f"{k}_ci_low", f"{k}_ci_high"]
    rows = []
    for t, b in enumerate(trend.birth_index):
        row = [b]
        for k in DESCRIPTOR_KEYS:
            row += [trend.mean[k][t], trend.ci_low[k][t], trend.ci_high[k][t]]
        rows.append(row)
    return write_csv(f"{prefix}_descriptors.csv", header, rows)


def export_baldwin(curve: BaldwinCurve, prefix) -> Path:
    return write_csv(
        f"{prefix}_baldwin.csv",
        ["generation", "n", "mean_iterations", "ci_low", "ci_high", "not_reached"],
        ([p.generation, p.n, p.mean, p.ci_low, p.ci_high, p.not_reached] for p in curve.points),
    )


def export_lineages(stats_: Sequence[LineageStats], prefix) -> Path:
    return write_csv(
        f"{prefix}_lineages.csv",
        ["lineage_id", "founder_fitness_rank", "final_abundance", "beneficial_mutation_count", "size"],
        ([s.lineage_id, s.founder_fitness_rank, s.final_abundance, s.beneficial_mutation_count, s.size]
         for s in stats_),
    )


AGENT_COLUMNS = (
    "run_id", "id", "lineage_id", "generation", "fitness", "forward_progress", "energy",
    "cow", "passively_stable", "dynamically_stable", "baldwin_iterations", "limbs", "dof",
)


def agent_rows(log: RunLog, agents: Sequence[Individual], criterion: float | None = None):
    gen = generation_index(log)
    crit = founder_criterion(log) if criterion is None else criterion
    for a in agents:
        r = a.fitness_report
        yield [
            log.run_id, a.id, a.lineage_id, gen[a.id], r.fitness, r.forward_progress, r.energy,
            _blank(r.cow), r.passively_stable, r.dynamically_stable,
            _blank(baldwin_iterations(a.curve, crit)), len(a.morphology), dof_count(a.morphology),
        ]


def _blank(v):
    return "" if v is None else v
