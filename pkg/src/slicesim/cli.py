"""Command line interface: gen-topology, run, train, experiment."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import Config, ConfigError, parse_config
from .demand import TraceProcess, read_trace
from .engine import run as run_sim
from .experiment import (
    build_graph,
    make_process,
    make_solver,
    prepare_policy,
    run_experiment,
    write_results_csv,
)
from .ppo.agent import PolicyState
from .ppo.env import SliceEnv
from .ppo.obs import ObsLayout
from .ppo.train import save_checkpoint, train
from .topology import TopologyError, generate_random_graph, load_graph, save_graph


def _load_config(path: str | None) -> Config:
    return parse_config(path) if path else Config()


def _range(text: str) -> tuple[float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def cmd_gen_topology(args) -> int:
    graph = generate_random_graph(
        args.nodes, args.links, args.capacity, args.delay, args.cost, seed=args.seed
    )
    save_graph(graph, args.out)
    print(f"wrote {args.out}: {graph.node_count} nodes, {graph.link_count} links")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if args.solver:
        cfg.sim.solver = args.solver
    if args.horizon is not None:
        cfg.sim.horizon = args.horizon
    if args.lam is not None:
        cfg.demand.lam = args.lam
    if args.graph_seed is not None:
        cfg.topology.seed = args.graph_seed
    if args.arrival_seed is not None:
        cfg.demand.seed = args.arrival_seed
    if args.ckpt:
        cfg.ppo.ckpt = args.ckpt

    graph = load_graph(args.topology) if args.topology else build_graph(cfg)
    if args.topology:
        cfg.topology.nodes = graph.node_count
        cfg.topology.links = graph.link_count
    if args.trace:
        process = TraceProcess(read_trace(args.trace))
    else:
        process = make_process(cfg, cfg.demand.lam, cfg.demand.seed)

    policy_state = None
    if cfg.sim.solver == "ppo":
        policy_state = prepare_policy(cfg, graph)
    solver = make_solver(cfg.sim.solver, cfg, graph, policy_state)
    result = run_sim(
        graph,
        process,
        solver,
        cfg.sim.horizon,
        fairness_denominator=cfg.slicing.fairness_denominator,
        record_events=bool(args.event_log) or cfg.sim.record_events,
    )
    if args.event_log:
        with open(args.event_log, "w") as fh:
            fh.write("\n".join(result.events) + ("\n" if result.events else ""))
    s = result.summary
    print(f"solver {cfg.sim.solver}")
    print(f"horizon {s.horizon}")
    print(f"generated {s.generated}")
    print(f"served {s.served}")
    print(f"evicted {s.evicted}")
    print(f"pending_end {s.pending_end}")
    print(f"total_cost {s.total_cost:.6g}")
    print(f"avg_cost_per_served {s.avg_cost_per_served:.6g}")
    print(f"sla_violation_rate {s.sla_violation_rate:.6g}")
    print(f"mean_fairness {s.mean_fairness:.6g}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    if args.iters is not None:
        cfg.ppo.iters = args.iters
    if args.rollout is not None:
        cfg.ppo.rollout = args.rollout
    if args.seed is not None:
        cfg.ppo.seed = args.seed

    graph = build_graph(cfg)
    layout = ObsLayout(
        node_count=graph.node_count,
        link_count=graph.link_count,
        queue_slots=cfg.ppo.queue_slots,
        history_k=cfg.ppo.history_k,
    )
    policy_state = PolicyState.create(cfg.ppo, layout)
    env = SliceEnv(
        graph,
        replace(cfg.demand, lam=cfg.ppo.train_lambda),
        cfg.ppo,
        slicing_cfg=cfg.slicing,
        horizon=cfg.sim.horizon,
    )
    curve = train(
        env,
        policy_state,
        progress=(lambda e: print(f"iter {e['iter']} mean_reward {e['mean_reward']:.4f}"))
        if args.verbose
        else None,
    )
    save_checkpoint(policy_state, args.ckpt)
    if args.curve_out:
        with open(args.curve_out, "w") as fh:
            fh.write("iter,mean_reward\n")
            for e in curve:
                fh.write(f"{e['iter']},{e['mean_reward']!r}\n")
    last = curve[-1]["mean_reward"] if curve else float("nan")
    print(f"trained {len(curve)} iterations, final mean reward {last:.4f}; wrote {args.ckpt}")
    return 0


def cmd_experiment(args) -> int:
    cfg = parse_config(args.config)
    out = args.out or cfg.experiment.out
    rows = run_experiment(
        cfg,
        progress=(lambda r: print(f"{r.solver} lambda={r.lam} seed={r.seed} done"))
        if args.verbose
        else None,
        workers=args.workers,
    )
    write_results_csv(rows, out)
    print(f"wrote {out}: {len(rows)} rows")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesim",
        description="Online network-slice provisioning simulator and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-topology", help="generate a random connected substrate graph")
    p.add_argument("--nodes", type=int, default=8)
    p.add_argument("--links", type=int, default=12)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--capacity", type=_range, default=(100.0, 200.0), metavar="LO,HI")
    p.add_argument("--delay", type=_range, default=(1.0, 10.0), metavar="LO,HI")
    p.add_argument("--cost", type=_range, default=(1.0, 20.0), metavar="LO,HI")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_topology)

    p = sub.add_parser("run", help="run one simulation and print the summary")
    p.add_argument("--config")
    p.add_argument("--solver", choices=("greedy", "ip", "ppo"))
    p.add_argument("--horizon", type=int)
    p.add_argument("--lam", "--lambda", dest="lam", type=float)
    p.add_argument("--graph-seed", type=int)
    p.add_argument("--arrival-seed", type=int)
    p.add_argument("--topology", help="graph file instead of random generation")
    p.add_argument("--trace", help="request trace to replay instead of sampling")
    p.add_argument("--ckpt", help="ppo checkpoint")
    p.add_argument("--event-log", help="write the event log here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="train the ppo policy and save a checkpoint")
    p.add_argument("--config")
    p.add_argument("--iters", type=int)
    p.add_argument("--rollout", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--curve-out")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help="run the benchmark sweep and write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1, help="replication worker processes")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TopologyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
