"""Command-line front end.

Subcommands: run, ablate, prop1, matchrate, distinguish, serve. Every
report writes CSV files plus rendered figures into --out. Exit code 0
on success, 2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from skillpref.harness import figures
from skillpref.harness.config import ConfigError, load_config
from skillpref.harness.experiments import (
    distinguish_experiment,
    matchrate_experiment,
    prop1_experiment,
)
from skillpref.harness.metrics import (
    ABLATION_HEADER,
    DISTINGUISH_HEADER,
    MATCHRATE_HEADER,
    PROP1_HEADER,
    RUN_HEADER,
    MetricsSink,
    ablation_rows,
    distinguish_rows,
    matchrate_rows,
    prop1_rows,
    run_rows,
)
from skillpref.training import RunConfig, ablate, run


def _base_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    return config


def _cell_tag(cell) -> str:
    tag = ("pre" if cell.pretrain_on else "nopre") + f"_{cell.selection}"
    return tag + ("_surf" if cell.surf else "")


def cmd_run(args) -> int:
    config = _base_config(args)
    metrics = run(config)
    sink = MetricsSink(args.out)
    path = sink.append("run", RUN_HEADER, run_rows(metrics))
    if metrics.rows:
        figures.learning_curve_figure(metrics.rows, sink.out_dir / "learning_curve.png")
        print(
            f"episodes={len(metrics.rows)} feedback_used={metrics.feedback_used} "
            f"final_return_gt={metrics.final_return_gt():.3f}"
        )
    print(f"wrote {path}")
    return 0


def cmd_ablate(args) -> int:
    config = _base_config(args)
    cells = ablate(config)
    sink = MetricsSink(args.out)
    path = sink.append("ablation", ABLATION_HEADER, ablation_rows(cells))
    for cell in cells:
        sink.append(f"run_{_cell_tag(cell)}", RUN_HEADER, run_rows(cell.metrics))
    figures.ablation_figure(cells, sink.out_dir / "ablation.png")
    print(f"wrote {path}")
    return 0


def cmd_prop1(args) -> int:
    c_values = [float(x) for x in args.c.split(",") if x]
    deltas = np.linspace(0.0, args.delta_max, args.delta_points)
    sweeps = prop1_experiment(c_values, deltas, args.trials, seed=args.seed or 0)
    sink = MetricsSink(args.out)
    path = sink.append("prop1", PROP1_HEADER, prop1_rows(sweeps))
    figures.prop1_figure(sweeps, sink.out_dir / "prop1.png")
    violations = sum(len(sweep.violations) for sweep in sweeps)
    print(f"wrote {path} (monotonicity violations: {violations})")
    return 0


def cmd_matchrate(args) -> int:
    edges = [float(x) for x in args.edges.split(",")] if args.edges else None
    rates = matchrate_experiment(
        args.env,
        args.epsilon,
        args.samples,
        seed=args.seed or 0,
        edges=edges,
    )
    sink = MetricsSink(args.out)
    path = sink.append("matchrate", MATCHRATE_HEADER, matchrate_rows(rates))
    figures.matchrate_figure(rates, sink.out_dir / "matchrate.png")
    print(f"wrote {path}")
    return 0


def cmd_distinguish(args) -> int:
    config = _base_config(args)
    config = replace(config, teacher="noisy", epsilon=args.epsilon)
    seeds = [config.seed + i for i in range(args.seeds)]
    result = distinguish_experiment(config, seeds)
    sink = MetricsSink(args.out)
    path = sink.append("distinguish", DISTINGUISH_HEADER, distinguish_rows(result))
    figures.distinguish_figure(result, sink.out_dir / "distinguish.png")
    print(
        f"skill={result.skill_ratio:.4f} disagreement={result.disagreement_ratio:.4f}"
    )
    print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    from skillpref.service import serve_run

    config = _base_config(args)
    config = replace(config, teacher="human")
    return serve_run(config, port=args.port, out_dir=args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skillpref",
        description="Skill-enhanced preference learning lab",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p, config_flag=True):
        if config_flag:
            p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("run", help="one training run")
    common(p)
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("ablate", help="pretraining x selection component grid")
    common(p)
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("prop1", help="disagreement variance: Monte Carlo vs closed form")
    common(p, config_flag=False)
    p.add_argument("--c", default="0.5,1.0,2.0", help="noise scales, comma separated")
    p.add_argument("--delta-max", type=float, default=4.0)
    p.add_argument("--delta-points", type=int, default=17)
    p.add_argument("--trials", type=int, default=200_000)
    p.set_defaults(handler=cmd_prop1)

    p = sub.add_parser("matchrate", help="noisy-teacher agreement by return gap")
    common(p, config_flag=False)
    p.add_argument("--env", default="point_runner")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--edges", help="bucket edges, comma separated return gaps")
    p.set_defaults(handler=cmd_matchrate)

    p = sub.add_parser("distinguish", help="distinguishable-query ratio by selection method")
    common(p)
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds")
    p.set_defaults(handler=cmd_distinguish)

    p = sub.add_parser("serve", help="label service plus a human-teacher run")
    common(p)
    p.add_argument("--port", type=int, default=8321)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code else 0
    if getattr(args, "command", None) is None:
        parser.print_usage()
        return 2
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
