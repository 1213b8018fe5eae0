"""Command-line entry point: init-config, run, chart, oracle."""

from __future__ import annotations

import argparse
import os
import sys
from collections import defaultdict

import numpy as np

from . import baselines, oracle
from .charts import emit_chart
from .envs import make_env
from .harness import (
    ConfigError,
    default_config,
    load_config,
    read_csv,
    run_experiment,
    save_config,
    _episode_generator,
)
from .mac import group_tables


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="dmimo-rl", description="D-MIMO Wi-Fi channel/grouping experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write a config file with full defaults")
    p.add_argument("--scenario", required=True, choices=("P1", "P2", "P3", "P4"))
    p.add_argument("--agent", default=None, help="reinforce | wolpertinger | baseline:<name>")
    p.add_argument("--out", default="config.json")

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", default=None, help="comma-separated seed list overriding the config")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory overriding the config")

    p = sub.add_parser("chart", help="moving-average chart from episode CSVs")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default="chart.svg")
    p.add_argument("--window", type=int, default=50)
    p.add_argument("--column", default="final_metric", choices=("final_metric", "best_metric"))

    p = sub.add_parser("oracle", help="brute-force reference solvers")
    osub = p.add_subparsers(dest="oracle_command", required=True)

    oc = osub.add_parser("channels", help="enumerate every channel plan for one episode")
    oc.add_argument("--config", required=True)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--episode", type=int, default=0)
    oc.add_argument("--top", type=int, default=5, help="how many plans to print")

    og = osub.add_parser("coloring", help="compare the coloring heuristic against exhaustive optima")
    og.add_argument("--vertices", type=int, default=8)
    og.add_argument("--colors", type=int, default=3)
    og.add_argument("--graphs", type=int, default=100)
    og.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_init_config(args) -> int:
    cfg = default_config(args.scenario, args.agent)
    save_config(cfg, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    import dataclasses

    run = cfg.run
    if args.seeds is not None:
        try:
            seeds = tuple(int(tok) for tok in args.seeds.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --seeds value: {exc}") from exc
        run = dataclasses.replace(run, seeds=seeds)
    if args.episodes is not None:
        run = dataclasses.replace(run, episodes=args.episodes)
    if args.out is not None:
        run = dataclasses.replace(run, out_dir=args.out)
    cfg = dataclasses.replace(cfg, run=run)
    cfg.validate()
    results = run_experiment(cfg)
    total = sum(len(v) for v in results.values())
    print(f"{total} episode records written to {cfg.run.out_dir}")
    return 0


def _cmd_chart(args) -> int:
    series = {}
    for path in args.csv:
        records = read_csv(path)
        by_episode = defaultdict(list)
        for rec in records:
            by_episode[rec.episode].append(getattr(rec, args.column))
        episodes = sorted(by_episode)
        name = os.path.splitext(os.path.basename(path))[0]
        series[name] = [float(np.mean(by_episode[e])) for e in episodes]
    emit_chart(series, args.out, window=args.window)
    print(f"wrote {args.out}")
    return 0


def _cmd_oracle_channels(args) -> int:
    cfg = load_config(args.config)
    env = make_env(cfg.scenario, cfg.topology, cfg.radio, cfg.mac)
    if not hasattr(env, "evaluate_plan"):
        raise ConfigError("the channel oracle applies to scenarios P1-P3")
    env.reset(_episode_generator(cfg, args.seed, args.episode))
    tables = group_tables(env._rh_tables, env.topology.group_vector)
    best_plan, best_value, scored = oracle.best_channel_plan(
        tables, cfg.scenario.metric, cfg.mac, cfg.radio.bandwidth_hz
    )
    print(f"plans evaluated: {len(scored)}")
    print("best_plan: " + " ".join(str(c) for c in best_plan))
    print(f"best_metric: {best_value:.6f}")
    for plan, value in sorted(scored, key=lambda pv: -pv[1])[: args.top]:
        print("  plan " + " ".join(str(c) for c in plan) + f" -> {value:.6f}")
    return 0


def _cmd_oracle_coloring(args) -> int:
    rng = np.random.default_rng(args.seed)
    within = 0
    for idx in range(args.graphs):
        weights = oracle.random_weighted_graph(rng, args.vertices)
        _, best = oracle.brute_force_coloring(weights, args.colors)
        heuristic = baselines.assign_hsum(weights, args.colors)
        obj = oracle.coloring_objective(weights, heuristic)
        ok = obj <= 1.1 * best
        within += ok
        print(f"graph {idx:3d}: optimum {best:.4f}  heuristic {obj:.4f}  {'ok' if ok else 'MISS'}")
    print(f"within 1.1x optimum: {within}/{args.graphs}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "init-config":
            return _cmd_init_config(args)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "chart":
            return _cmd_chart(args)
        if args.oracle_command == "channels":
            return _cmd_oracle_channels(args)
        return _cmd_oracle_coloring(args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
