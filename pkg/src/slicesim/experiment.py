"""Experiment orchestration: lambda sweeps, seed batteries, CSV emission."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import Config, ConfigError
from .demand import ArrivalProcess
from .engine import RunResult, run
from .exact import ExactSolver
from .greedy import GreedySolver
from .ppo.agent import PolicyState
from .ppo.env import PpoSolver, SliceEnv
from .ppo.obs import ObsLayout
from .ppo.train import load_checkpoint, train
from .topology import NetworkGraph, generate_random_graph

CSV_SCHEMA = "schema=1"
CSV_COLUMNS = (
    "row",
    "solver",
    "lambda",
    "seed",
    "avg_cost_per_request",
    "sla_violation_rate",
    "mean_fairness",
    "wall_time_ms",
)


@dataclass(frozen=True)
class ResultRow:
    row: str  # sample | mean | sem
    solver: str
    lam: float
    seed: str
    avg_cost_per_request: float
    sla_violation_rate: float
    mean_fairness: float
    wall_time_ms: float


def build_graph(cfg: Config) -> NetworkGraph:
    t = cfg.topology
    return generate_random_graph(
        t.nodes, t.links, t.capacity, t.delay, t.cost, seed=t.seed
    )


def arrival_seed_for(cfg: Config, replication: int) -> int:
    return cfg.demand.seed + replication


def make_process(cfg: Config, lam: float, seed: int) -> ArrivalProcess:
    d = cfg.demand
    return ArrivalProcess(
        node_count=cfg.topology.nodes,
        lam=lam,
        rate_scale=d.rate_scale,
        delay_scale=d.delay_scale,
        lifetime_scale=d.lifetime_scale,
        seed=seed,
    )


def make_solver(name: str, cfg: Config, graph: NetworkGraph, policy_state: PolicyState | None = None):
    if name == "greedy":
        return GreedySolver(cfg.greedy, cfg.slicing)
    if name == "ip":
        return ExactSolver(cfg.ip, cfg.slicing)
    if name == "ppo":
        if policy_state is None:
            raise ConfigError("ppo solver needs a trained policy (checkpoint or inline training)")
        return PpoSolver(policy_state, cfg.slicing)
    raise ConfigError(f"unknown solver '{name}'")


def prepare_policy(cfg: Config, graph: NetworkGraph, progress=None) -> PolicyState:
    """Load the configured checkpoint, or train inline with the config budget."""
    layout = ObsLayout(
        node_count=graph.node_count,
        link_count=graph.link_count,
        queue_slots=cfg.ppo.queue_slots,
        history_k=cfg.ppo.history_k,
    )
    if cfg.ppo.ckpt:
        return load_checkpoint(cfg.ppo.ckpt, cfg.ppo, expected_layout=layout)
    policy_state = PolicyState.create(cfg.ppo, layout)
    env = SliceEnv(
        graph,
        replace(cfg.demand, lam=cfg.ppo.train_lambda),
        cfg.ppo,
        slicing_cfg=cfg.slicing,
        horizon=cfg.sim.horizon,
    )
    train(env, policy_state, progress=progress)
    return policy_state


def run_single(
    cfg: Config,
    solver_name: str,
    lam: float,
    replication: int,
    graph: NetworkGraph | None = None,
    policy_state: PolicyState | None = None,
) -> tuple[ResultRow, RunResult]:
    graph = graph if graph is not None else build_graph(cfg)
    process = make_process(cfg, lam, arrival_seed_for(cfg, replication))
    solver = make_solver(solver_name, cfg, graph, policy_state)
    start = time.perf_counter()
    result = run(
        graph,
        process,
        solver,
        cfg.sim.horizon,
        fairness_denominator=cfg.slicing.fairness_denominator,
        record_events=cfg.sim.record_events,
    )
    wall_ms = (time.perf_counter() - start) * 1000.0
    s = result.summary
    row = ResultRow(
        row="sample",
        solver=solver_name,
        lam=lam,
        seed=str(arrival_seed_for(cfg, replication)),
        avg_cost_per_request=s.avg_cost_per_served,
        sla_violation_rate=s.sla_violation_rate,
        mean_fairness=s.mean_fairness,
        wall_time_ms=wall_ms,
    )
    return row, result


def _mean_sem(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _run_task(args) -> ResultRow:
    cfg, solver_name, lam, rep, graph, policy_state = args
    row, _ = run_single(cfg, solver_name, lam, rep, graph, policy_state)
    return row


def run_experiment(cfg: Config, progress=None, workers: int = 1) -> list[ResultRow]:
    """Cartesian product of solver x lambda x replication, plus summary rows.

    The substrate graph is generated once from the topology seed and shared
    by every run; replications vary the arrival seed, so solvers see
    identical request streams (paired comparisons). With workers > 1 the
    runs are dispatched to a process pool; each run owns its state and the
    merge order is fixed, so parallelism never changes the output rows.
    """
    exp = cfg.experiment
    graph = build_graph(cfg)
    policy_state = None
    if "ppo" in exp.solvers:
        policy_state = prepare_policy(cfg, graph, progress=progress)

    tasks = [
        (cfg, solver_name, lam, rep, graph, policy_state)
        for solver_name in exp.solvers
        for lam in exp.lambdas
        for rep in range(exp.replications)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            sample_rows = list(pool.map(_run_task, tasks))
    else:
        sample_rows = []
        for task in tasks:
            sample_rows.append(_run_task(task))
            if progress:
                progress(sample_rows[-1])

    rows: list[ResultRow] = []
    index = 0
    for solver_name in exp.solvers:
        for lam in exp.lambdas:
            samples = sample_rows[index : index + exp.replications]
            index += exp.replications
            rows.extend(samples)
            cost_m, cost_s = _mean_sem([r.avg_cost_per_request for r in samples])
            sla_m, sla_s = _mean_sem([r.sla_violation_rate for r in samples])
            fair_m, fair_s = _mean_sem([r.mean_fairness for r in samples])
            wall_m, wall_s = _mean_sem([r.wall_time_ms for r in samples])
            rows.append(
                ResultRow("mean", solver_name, lam, "-", cost_m, sla_m, fair_m, wall_m)
            )
            rows.append(
                ResultRow("sem", solver_name, lam, "-", cost_s, sla_s, fair_s, wall_s)
            )
    return rows


def write_results_csv(rows: list[ResultRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(
                f"{r.row},{r.solver},{r.lam!r},{r.seed},{r.avg_cost_per_request!r},"
                f"{r.sla_violation_rate!r},{r.mean_fairness!r},{r.wall_time_ms!r}\n"
            )


def read_results_csv(path: str) -> list[ResultRow]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_SCHEMA:
        raise ConfigError(f"{path}: missing '{CSV_SCHEMA}' header line")
    if len(lines) < 2 or lines[1] != ",".join(CSV_COLUMNS):
        raise ConfigError(f"{path}: unexpected column header")
    rows = []
    for raw in lines[2:]:
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ConfigError(f"{path}: malformed row {raw!r}")
        rows.append(
            ResultRow(
                row=parts[0],
                solver=parts[1],
                lam=float(parts[2]),
                seed=parts[3],
                avg_cost_per_request=float(parts[4]),
                sla_violation_rate=float(parts[5]),
                mean_fairness=float(parts[6]),
                wall_time_ms=float(parts[7]),
            )
        )
    return rows
