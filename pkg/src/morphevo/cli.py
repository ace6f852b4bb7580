"""Command-line entry point: ``morphevo {evolve,analyze,validate,terrain,print-default-config}``.

Exit codes: 0 success, 1 invalid morphology, 2 unreadable input or bad
flags, 3 checkpoint/config mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, analytics
from .config import ConfigError, RunConfig
from .evolution import Void, run
from .morphology import Morphology, MorphologyParseError, validate
from .runlog import CheckpointMismatch, LogError, read_log
from .terrain import TerrainSpec, generate, write_heightfield_csv, write_segments_json

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3
LOG_NAME, CHECKPOINT_NAME = "run.jsonl", "checkpoint.json"

SINGLE_LOG = ("muller", "tree", "baldwin", "descriptors", "stability")
ANALYSES = (*SINGLE_LOG, "top", "correlate")


def _err(msg: str) -> None:
    print(f"morphevo: {msg}", file=sys.stderr)


# ------------------------------------------------------------------ evolve

def _env_int(name: str) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {raw!r}") from None


def cmd_evolve(args) -> int:
    try:
        cfg = RunConfig.load(args.config)
        cfg = cfg.with_overrides(
            output_dir=os.environ.get("MORPHEVO_OUTPUT_DIR") or None,
            workers=_env_int("MORPHEVO_WORKERS"),
        )
        cfg = cfg.with_overrides(
            workers=args.workers, run_seed=args.seed,
            max_evaluations=args.max_evals, output_dir=args.output_dir,
        )
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _err(f"cannot read config {args.config}: {exc.strerror}")
        return EXIT_USAGE

    if args.resume:
        ckpt = Path(args.resume)
        run_dir = ckpt.parent
    else:
        run_dir = Path(cfg.output_dir) / f"{cfg.env.lower()}-seed{cfg.run_seed}"
        ckpt = run_dir / CHECKPOINT_NAME
    log_path = run_dir / LOG_NAME
    print(f"seed {cfg.run_seed}")
    print(f"log {log_path}")
    sys.stdout.flush()

    total = cfg.population_size + cfg.max_evaluations

    def progress(event) -> None:
        if args.quiet:
            return
        if isinstance(event, Void):
            print(f"void ticket={event.ticket} parent={event.parent_id} {event.reason}", file=sys.stderr)
            return
        r = event.fitness_report
        print(
            f"[{event.birth_index + 1}/{total}] id={event.id} parent={event.parent_id} "
            f"op={event.op or 'init'} fitness={r.fitness:.3f} progress={r.forward_progress:.3f}",
            file=sys.stderr,
        )

    try:
        log = run(cfg, log_path=log_path, checkpoint_path=ckpt, resume=bool(args.resume),
                  force=args.force, progress=progress)
    except CheckpointMismatch as exc:
        _err(f"checkpoint mismatch: {exc} (use --force to override)")
        return EXIT_MISMATCH
    except (FileNotFoundError, LogError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    print(f"records {len(log.individuals)}")
    print(f"voids {len(log.voids)}")
    return EXIT_OK


# ----------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    if args.analysis in SINGLE_LOG and len(args.logs) != 1:
        _err(f"analyze {args.analysis} takes exactly one log")
        return EXIT_USAGE
    try:
        logs = [read_log(p) for p in args.logs]
        for lg in logs:
            if not lg.individuals:
                raise LogError(f"log for {lg.run_id} has no records")
            analytics.generation_index(lg)
    except (LogError, analytics.MissingParent) as exc:
        _err(f"bad log: {exc}")
        return EXIT_USAGE
    out = Path(args.out_dir or Path(args.logs[0]).parent)
    out.mkdir(parents=True, exist_ok=True)
    log = logs[0]
    prefix = out / log.run_id
    paths: list[Path] = []
    a = args.analysis
    if a == "muller":
        series = analytics.muller_series(log, args.top_k, args.checkpoints)
        paths += analytics.export_muller(series, prefix)
    elif a == "tree":
        phylo = analytics.build_phylogeny(log)
        nwk = Path(f"{prefix}_tree.nwk")
        nwk.write_text(phylo.to_newick())
        js = Path(f"{prefix}_tree.json")
        js.write_text(json.dumps(phylo.to_json(), indent=1) + "\n")
        paths += [nwk, js, analytics.export_lineages(analytics.lineage_stats(log), prefix)]
    elif a == "baldwin":
        curve = analytics.baldwin_curve(log, args.percentile, args.top_n)
        paths.append(analytics.export_baldwin(curve, prefix))
        print(f"criterion {curve.criterion!r} not_reached {curve.not_reached}")
    elif a == "descriptors":
        paths.append(analytics.export_trend(analytics.descriptor_trends(log, args.checkpoints), prefix))
    elif a == "stability":
        xs, fr = analytics.stable_fraction_trend(log, args.checkpoints)
        paths.append(analytics.write_csv(f"{prefix}_stability.csv", ["birth_index", "stable_fraction"], zip(xs, fr)))
    elif a in ("top", "correlate"):
        agents = analytics.select_top_agents(logs, args.per_lineage, args.final_n)
        owner = {id(ind): lg for lg in logs for ind in lg.individuals}
        rows = []
        for lg in logs:
            rows.extend(analytics.agent_rows(lg, [ag for ag in agents if owner[id(ag)] is lg]))
        rows.sort(key=lambda r: (-r[4], r[0], r[1]))
        paths.append(analytics.write_csv(f"{prefix}_{a}_agents.csv", analytics.AGENT_COLUMNS, rows))
        if a == "correlate":
            crit = analytics.founder_criterion(log) if len(logs) == 1 else None
            try:
                c = analytics.fitness_cow_correlation(agents, crit)
            except (analytics.DegenerateVariance, ValueError) as exc:
                _err(f"cannot correlate: {exc}")
                return EXIT_USAGE
            paths.append(analytics.write_csv(
                f"{prefix}_correlate.csv",
                ["pair", "n", "r", "p"],
                [["fitness_vs_cow", c.n, c.r, c.p],
                 ["baldwin_vs_cow", c.baldwin_n, c.baldwin_r, c.baldwin_p]],
            ))
            print(f"fitness~cow r={c.r:.6f} p={c.p:.6g} n={c.n}")
    for p in paths:
        print(p)
    return EXIT_OK


# ---------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    try:
        m = Morphology.from_json(Path(args.path).read_text())
    except OSError as exc:
        _err(f"cannot read {args.path}: {exc.strerror}")
        return EXIT_USAGE
    except MorphologyParseError as exc:
        _err(f"parse error: {exc}")
        return EXIT_USAGE
    report = validate(m)
    print(report)
    return EXIT_OK if report.ok else EXIT_INVALID


# ----------------------------------------------------------------- terrain

def cmd_terrain(args) -> int:
    try:
        spec = TerrainSpec(args.env.upper(), args.seed, args.resolution)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    segments, hf = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"terrain_{spec.env.lower()}_seed{spec.seed}"
    print(write_heightfield_csv(hf, f"{stem}.csv"))
    print(write_segments_json(segments, f"{stem}_segments.json"))
    return EXIT_OK


def cmd_print_default_config(args) -> int:
    print(RunConfig().to_json())
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morphevo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"morphevo {__version__}")
    p.add_argument("--print-default-config", action="store_true", help="emit the default config and exit")
    sub = p.add_subparsers(dest="command")

    ev = sub.add_parser("evolve", help="run evolution from a JSON config")
    ev.add_argument("config")
    ev.add_argument("--resume", metavar="CHECKPOINT")
    ev.add_argument("--force", action="store_true", help="resume even if the config digest differs")
    ev.add_argument("--workers", type=int)
    ev.add_argument("--seed", type=int)
    ev.add_argument("--max-evals", type=int)
    ev.add_argument("--output-dir")
    ev.add_argument("--quiet", action="store_true", help="no per-evaluation progress")
    ev.set_defaults(func=cmd_evolve)

    an = sub.add_parser("analyze", help="derive tables from run logs")
    an.add_argument("analysis", choices=ANALYSES)
    an.add_argument("logs", nargs="+")
    an.add_argument("--out-dir")
    an.add_argument("--top-k", type=int, default=10)
    an.add_argument("--checkpoints", type=int, default=50)
    an.add_argument("--top-n", type=int, default=100)
    an.add_argument("--percentile", type=float, default=0.75)
    an.add_argument("--per-lineage", type=int, default=3)
    an.add_argument("--final-n", type=int)
    an.set_defaults(func=cmd_analyze)

    va = sub.add_parser("validate", help="check a morphology JSON file")
    va.add_argument("path")
    va.set_defaults(func=cmd_validate)

    te = sub.add_parser("terrain", help="write a heightfield CSV and its segment list")
    te.add_argument("--env", required=True, type=str.lower, choices=("ft", "vt", "mvt"))
    te.add_argument("--seed", type=int, default=0)
    te.add_argument("--out", default=".")
    te.add_argument("--resolution", type=float, default=0.1)
    te.set_defaults(func=cmd_terrain)

    pd = sub.add_parser("print-default-config", help="emit every default setting as JSON")
    pd.set_defaults(func=cmd_print_default_config)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.print_default_config:
        return cmd_print_default_config(args)
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
