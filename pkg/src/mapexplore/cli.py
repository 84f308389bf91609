"""Command line entry point.

    mapexplore explore --world W --strategy S --seed N [--no-aou]
    mapexplore train --config C
    mapexplore bench --config C --out DIR
    mapexplore ablate {structmap|aou|roi} --config C [--out DIR]

Exit codes: 0 success, 1 usage error (bad arguments, config or world
file), 2 run failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .config import ConfigError, ExploreConfig, RunConfig, load_config
from .worldsim import EmptyWorldError, InvalidPoseError, WorldFormatError

log = logging.getLogger("mapexplore")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

USAGE_ERRORS = (ConfigError, FileNotFoundError, WorldFormatError, EmptyWorldError, InvalidPoseError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapexplore", description="Structured-map frontier exploration toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("explore", help="run one exploration episode")
    e.add_argument("--world", required=True, help="bundled world name or path to a world file")
    e.add_argument("--strategy", required=True, choices=bench.STRATEGY_NAMES)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--no-aou", action="store_true", help="send raw network targets straight to the planner")
    e.add_argument("--config", help="optional config file for exploration parameters")
    e.add_argument("--checkpoint", help="policy checkpoint (map-aware strategy)")
    e.add_argument("--out", help="directory for the step CSV, path CSV, final map and trajectory PNG")

    t = sub.add_parser("train", help="train the map-aware policy with PPO")
    t.add_argument("--config", required=True)
    t.add_argument("--out", help="output directory (default: config 'out')")

    b = sub.add_parser("bench", help="completion-tier benchmark")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, help="parallel episode runners (default: config 'workers')")
    b.add_argument("--no-plots", action="store_true")

    a = sub.add_parser("ablate", help="ablation studies")
    a.add_argument("study", choices=("structmap", "aou", "roi"))
    a.add_argument("--config", required=True)
    a.add_argument("--out", help="output directory (default: config 'out')")
    a.add_argument("--no-plots", action="store_true")
    return p


def _kv(row: dict) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.4g}"
        return "" if v is None else str(int(v) if isinstance(v, bool) else v)

    return " ".join(f"{k}={fmt(v)}" for k, v in row.items())


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    p = Path(cfg.out)
    return p if p.is_absolute() else cfg.base_dir / p


def cmd_explore(args) -> int:
    from .rl import run_episode
    from .worlds import load_named

    cfg = load_config(args.config) if args.config else RunConfig()
    explore: ExploreConfig = replace(cfg.explore, use_aou=not args.no_aou)
    world = load_named(args.world)
    strategy = bench.make_strategy(args.strategy, args.checkpoint or bench._checkpoint_path(cfg))
    name = Path(args.world).stem
    rec = run_episode(world, strategy, explore, args.seed, world_name=name)
    print(f"world={name} strategy={args.strategy} seed={args.seed} aou={int(explore.use_aou)} "
          f"steps={len(rec.steps)} completeness={rec.final_completeness:.4f} "
          f"distance_m={rec.distance:.2f} time_s={rec.elapsed:.2f} invalid={rec.invalid_decisions} "
          f"terminal={rec.terminal.value}")
    if args.out:
        from . import plotting

        out = Path(args.out)
        stem = out / f"{name}_{args.strategy}_{args.seed}"
        bench.write_trajectory(rec, stem)
        plotting.trajectory(world, rec.path, stem.with_suffix(".png"),
                            title=f"{name} / {args.strategy} / seed {args.seed}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .rl import train

    cfg = load_config(args.config)
    worlds = bench.validate(cfg, strategies=[])
    out = _out_dir(args, cfg)
    result = train(worlds, cfg.ppo, cfg.explore, cfg.total_episodes, cfg.seed, cfg.max_updates,
                   cfg.plateau, out, cfg.checkpoint_every)
    from . import plotting

    plotting.reward_curve(result.curve, out / "reward_curve.png")
    print(f"episodes={len(result.curve)} updates={result.updates} checkpoint={out / 'checkpoint_final.mxck'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    workers = args.workers if args.workers is not None else cfg.workers
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    report = bench.run_benchmark(cfg, args.out, plots=not args.no_plots, workers=workers)
    for row in report.aggregate():
        print(_kv(row))
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(args, cfg)
    plots = not args.no_plots
    if args.study == "structmap":
        worlds = bench.validate(cfg, strategies=[])
        out.mkdir(parents=True, exist_ok=True)
        for wname, world in worlds:
            rows = bench.ablate_structmap_timing(world, cfg.explore, cfg.snapshots, cfg.seed)
            summary = bench.timing_summary(rows)
            summary.update(bench.timing_checks(summary))
            (out / f"structmap_{wname}.csv").write_text(bench.rows_to_csv(rows, bench.TIMING_FIELDS))
            (out / f"structmap_{wname}_summary.csv").write_text(bench.summary_csv(summary))
            if plots:
                from . import plotting

                plotting.timing_plot(rows, out / f"structmap_{wname}.png")
            print(f"world={wname} {_kv(summary)}")
    elif args.study == "aou":
        worlds = bench.validate(cfg, strategies=[cfg.aou_strategy])
        rows = bench.ablate_aou(worlds, cfg.explore, cfg.run_seeds(), cfg.aou_strategy, bench._checkpoint_path(cfg))
        summary = bench.aou_summary(rows)
        out.mkdir(parents=True, exist_ok=True)
        (out / "aou.csv").write_text(bench.rows_to_csv(rows, bench.AOU_FIELDS))
        (out / "aou_summary.csv").write_text(bench.summary_csv(summary))
        if plots:
            from . import plotting

            plotting.aou_plot(rows, out / "aou.png")
        print(_kv(summary))
    else:
        worlds = bench.validate(cfg, strategies=[])
        rows = bench.ablate_roi(worlds, cfg.explore, cfg.run_seeds(), cfg.n_values)
        summary = bench.roi_summary(rows)
        out.mkdir(parents=True, exist_ok=True)
        (out / "roi.csv").write_text(bench.rows_to_csv(rows, bench.ROI_FIELDS))
        (out / "roi_summary.csv").write_text(bench.summary_csv(summary))
        if plots:
            from . import plotting

            plotting.roi_plot(summary, out / "roi.png")
        for s in summary:
            print(_kv(s))
    return EXIT_OK


COMMANDS = {"explore": cmd_explore, "train": cmd_train, "bench": cmd_bench, "ablate": cmd_ablate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mapexplore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as exc:
        print(f"mapexplore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("run failure", exc_info=True)
        print(f"mapexplore: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
