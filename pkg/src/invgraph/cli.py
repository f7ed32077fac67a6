"""Command-line entry point: ``invgraph <command> [flags]``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import env as envmod
from . import harness
from .marl import VARIANTS, Trainer
from .policy import ActionBounds, probe
from .supply_net import SHIPPED, NetworkError

COMMANDS = ("train", "eval", "baseline", "noise-sweep", "demand-shift", "timing", "probe")


def _seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("need at least one seed")
    return seeds


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invgraph", description="Multi-agent inventory control experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, net_default="net6"):
        sp.add_argument("--net", default=net_default, help=f"shipped network ({', '.join(SHIPPED)}) or a file")
        sp.add_argument("--algo", default="regpgcn", choices=VARIANTS)
        sp.add_argument("--seed", type=_seeds, default=harness.DEFAULT_SEEDS, help="comma-separated seeds")
        sp.add_argument("--iters", type=int, default=60)
        sp.add_argument("--noise-std", type=float, default=0.0)
        sp.add_argument("--lambda-d", type=float, default=None)
        sp.add_argument("--lambda-l", type=float, default=None)
        sp.add_argument("--history", type=int, default=None, metavar="M")
        sp.add_argument("--episodes", type=int, default=20)
        sp.add_argument("--batch-size", type=int, default=None)
        sp.add_argument("--out", type=Path, default=Path("runs"))

    sp = sub.add_parser("train", help="train one variant for every seed")
    common(sp)
    sp.add_argument("--resume", action="store_true", help="continue from checkpoints in --out")

    sp = sub.add_parser("eval", help="evaluate a checkpoint or static policy file")
    common(sp)
    sp.add_argument("--checkpoint", type=Path, required=True)

    sp = sub.add_parser("baseline", help="tune the static (s, S) benchmark")
    common(sp)
    sp.add_argument("--starts", type=int, default=20)
    sp.add_argument("--budget", type=int, default=5000)

    sp = sub.add_parser("noise-sweep", help="train the noisy pooled variant over value-noise levels")
    common(sp, net_default="net18")
    sp.add_argument("--sigmas", type=_floats, default=harness.NOISE_LEVELS)

    sp = sub.add_parser("demand-shift", help="evaluate a checkpoint under shifted demand rates")
    common(sp)
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--levels", type=_floats, default=harness.DEMAND_LEVELS)

    sp = sub.add_parser("timing", help="seconds per training iteration by variant and network size")
    common(sp)
    sp.add_argument("--variants", default=",".join(VARIANTS))
    sp.add_argument("--nets", default=",".join(SHIPPED))

    sp = sub.add_parser("probe", help="print the (s, S) pair an agent produces for one observation")
    sp.add_argument("--checkpoint", type=Path, required=True)
    sp.add_argument("--node", type=int, required=True)
    sp.add_argument("--obs", type=_floats, required=True, help="raw observation: v,b,p,demand history,order history")
    return p


def _spec(args) -> harness.ExperimentSpec:
    overrides = {}
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    return harness.ExperimentSpec(
        command=args.command,
        net=args.net,
        algo=args.algo,
        seeds=args.seed,
        iterations=args.iters,
        noise_std=args.noise_std,
        lambda_d=args.lambda_d,
        lambda_l=args.lambda_l,
        history=args.history,
        out=args.out,
        episodes=args.episodes,
        resume=getattr(args, "resume", False),
        algo_overrides=overrides,
    )


def _probe(args) -> dict:
    tr = Trainer.load(args.checkpoint)
    net = tr.net
    if not 0 <= args.node < net.N:
        raise ValueError(f"node must lie in [0, {net.N - 1}]")
    obs = np.asarray(args.obs, dtype=float)
    if obs.shape != (envmod.obs_dim(net.history),):
        raise ValueError(f"observation needs {envmod.obs_dim(net.history)} entries, got {obs.size}")
    node = net.nodes[args.node]
    x = obs / envmod.obs_scale(net)[args.node]
    return probe(tr.actors[args.node], x, ActionBounds.for_node(node), obs[0], node.max_order)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "probe":
            print(json.dumps(_probe(args), indent=2))
            return 0
        spec = _spec(args)
        if args.command == "train":
            result = harness.cmd_train(spec)
        elif args.command == "eval":
            result = harness.cmd_eval(spec, args.checkpoint)
        elif args.command == "baseline":
            result = harness.cmd_baseline(spec, n_starts=args.starts, budget=args.budget, episodes=args.episodes)
        elif args.command == "noise-sweep":
            result = harness.cmd_noise_sweep(spec, sigmas=args.sigmas)
        elif args.command == "demand-shift":
            result = harness.cmd_demand_shift(spec, args.checkpoint, levels=args.levels)
        else:
            result = harness.cmd_timing(
                spec,
                variants=tuple(v for v in args.variants.split(",") if v),
                networks=tuple(n for n in args.nets.split(",") if n),
            )
    except (ValueError, OSError, NetworkError, KeyError) as exc:
        print(f"invgraph {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
