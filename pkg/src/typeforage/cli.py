"""Command line front end.

typeforage run    --config cfg.json --out results/ [overrides]
typeforage replay --trace results/abu-all/traces/instance_0000.json
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import ExperimentConfig, MethodSpec, replay_trace, run_batch

ESTIMATOR_CHOICES = ("none", "aga", "abu", "ego", "rnd", "cor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typeforage")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch of episodes")
    run_p.add_argument("--config", help="experiment config JSON")
    run_p.add_argument("--out", help="output directory for CSVs and summary.json")
    run_p.add_argument("--seed", type=int, help="override base seed")
    run_p.add_argument("--instances", type=int, help="override instance count")
    run_p.add_argument("--world", help="override world preset (10x10 or 15x15)")
    run_p.add_argument("--rollouts", type=int, help="override planner rollouts")
    run_p.add_argument("--estimator", choices=ESTIMATOR_CHOICES,
                       help="run a single method with this estimator (rnd/cor are baselines)")
    run_p.add_argument("--selection", choices=("all", "posterior", "ucb1"),
                       help="type selection policy for --estimator")
    run_p.add_argument("--ego-budget", type=int, help="evaluation budget for --estimator ego")
    run_p.add_argument("--save-traces", action="store_true", help="record replayable traces")
    run_p.add_argument("--jobs", type=int, help="parallel worker processes (default 1)")
    run_p.add_argument("--leader-view", choices=("own", "leader"),
                       help="view cone a real follower assumes for its leader")

    replay_p = sub.add_parser("replay", help="re-simulate a recorded episode")
    replay_p.add_argument("--trace", required=True, help="trace JSON written by run --save-traces")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            config = ExperimentConfig.from_json(json.load(fh))
    else:
        config = ExperimentConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.instances is not None:
        config.instances = args.instances
    if args.world is not None:
        config.world = args.world
    if args.rollouts is not None:
        config.rollouts = args.rollouts
    if args.out is not None:
        config.out = args.out
    if args.save_traces:
        config.save_traces = True
    if args.jobs is not None:
        config.jobs = args.jobs
    if args.leader_view is not None:
        config.leader_view = args.leader_view
    if args.estimator is not None:
        selection = args.selection or "all"
        budget = args.ego_budget or 10
        if args.estimator == "rnd":
            method = MethodSpec.rnd()
        elif args.estimator == "cor":
            method = MethodSpec.cor()
        else:
            method = MethodSpec(
                f"{args.estimator}-{selection}", estimator=args.estimator,
                selection=selection, ego_budget=budget,
            )
        config.methods = [method]
    elif args.selection is not None or args.ego_budget is not None:
        for m in config.methods:
            if args.selection is not None:
                m.selection = args.selection
            if args.ego_budget is not None:
                m.ego_budget = args.ego_budget
    return config


def cmd_run(args) -> int:
    config = _config_from_args(args)
    summary = run_batch(config)
    # without --out the summary JSON owns stdout, so chatter moves to stderr
    progress = sys.stdout if config.out else sys.stderr
    for name, agg in summary["methods"].items():
        steps = agg["steps_mean"]
        print(
            f"{name}: completion {agg['completion_rate']:.2f}"
            + (f", mean steps {steps:.1f}" if steps is not None else ""),
            file=progress,
        )
    if config.out:
        print(f"wrote {config.out}/summary.json")
    else:
        json.dump(summary, sys.stdout, indent=2)
        print()
    return 0


def cmd_replay(args) -> int:
    with open(args.trace) as fh:
        trace = json.load(fh)
    print(f"world {trace['world']}, method {trace['method']}")
    total = 0
    for step, state, reward in replay_trace(trace):
        total += reward
        print(f"step {step}  items left {state.remaining_items()}  reward {reward}")
        print(state.render())
    print(f"collected {total} items over {len(trace['joint_actions'])} steps")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_replay(args)


if __name__ == "__main__":
    sys.exit(main())
