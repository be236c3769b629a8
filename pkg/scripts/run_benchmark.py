#!/usr/bin/env python3
"""Reproduce the solver-comparison data series (cost and SLA rate vs lambda).

Trains the PPO policy inline, runs the full sweep for all three solvers and
prints the per-lambda summary alongside writing the CSV.

    python3 scripts/run_benchmark.py [--out results.csv] [--no-ppo] [--reps N]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from slicesim.config import parse_config
from slicesim.experiment import run_experiment, write_results_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(Path(__file__).parent / "table1_benchmark.ini"))
    parser.add_argument("--out", default="results.csv")
    parser.add_argument("--no-ppo", action="store_true", help="skip training and the ppo rows")
    parser.add_argument("--reps", type=int, help="override replication count")
    args = parser.parse_args()

    cfg = parse_config(args.config)
    cfg.experiment.out = args.out
    if not args.no_ppo and "ppo" not in cfg.experiment.solvers:
        cfg.experiment.solvers = tuple(cfg.experiment.solvers) + ("ppo",)
    if args.reps:
        cfg.experiment.replications = args.reps

    done = {"n": 0}

    def progress(entry):
        if hasattr(entry, "solver"):
            done["n"] += 1
            print(f"  [{done['n']}] {entry.solver} lambda={entry.lam} seed={entry.seed}", flush=True)
        elif entry.get("iter", -1) % 50 == 0:
            print(f"  train iter {entry['iter']} mean reward {entry['mean_reward']:.3f}", flush=True)

    rows = run_experiment(cfg, progress=progress)
    write_results_csv(rows, cfg.experiment.out)
    print(f"\nwrote {cfg.experiment.out}")

    print(f"\n{'solver':>8} {'lambda':>7} {'avg cost/request':>17} {'sla rate':>9} {'fairness':>9}")
    for r in rows:
        if r.row == "mean":
            print(
                f"{r.solver:>8} {r.lam:>7.2g} {r.avg_cost_per_request:>17.3f} "
                f"{r.sla_violation_rate:>9.4f} {r.mean_fairness:>9.4f}"
            )


if __name__ == "__main__":
    main()
