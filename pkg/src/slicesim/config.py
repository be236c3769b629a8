"""Configuration dataclasses and the sectioned key-value config parser."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields


class ConfigError(ValueError):
    pass


@dataclass
class TopologyConfig:
    nodes: int = 8
    links: int = 12
    capacity: tuple[float, float] = (100.0, 200.0)
    delay: tuple[float, float] = (1.0, 10.0)
    cost: tuple[float, float] = (1.0, 20.0)
    seed: int = 1


@dataclass
class DemandConfig:
    # Scales applied to the base normal shapes; defaults give a regime where
    # the arrival sweep spans under- to over-subscription of the default
    # 12-link substrate (see README, benchmark defaults).
    lam: float = 2.0
    rate_scale: float = 300.0
    delay_scale: float = 18.0
    lifetime_scale: float = 2.0
    seed: int = 7


@dataclass
class SlicingConfig:
    max_paths: int = 1000
    max_hops: int = 0  # 0 = node_count - 1
    fairness_denominator: str = "links"  # links | slices


@dataclass
class GreedyConfig:
    improvement: str = "strict_both"  # strict_both | either | weighted_sum
    w1: float = 1.0
    w2: float = 1.0


@dataclass
class IpConfig:
    mode: str = "lex"  # lex | weighted
    w1: float = 1.0
    w2: float = 1.0
    node_limit: int = 200_000


@dataclass
class PpoConfig:
    gamma: float = 0.99
    clip: float = 0.2
    gae_lambda: float = 0.95
    learning_rate: float = 3e-4
    epochs: int = 4
    minibatch: int = 64
    rollout: int = 512
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    iters: int = 400
    queue_slots: int = 16  # M: observed request slots
    history_k: int = 4
    hidden: tuple[float, float] = (64.0, 64.0)
    reward: str = "shaped"  # shaped | literal
    kappa: float = 2.0
    p_norm: float = 20.0
    lifetime_ref: float = 10.0
    optimizer: str = "adam"  # adam | sgd
    eval_mode: str = "threshold"  # threshold | sample
    seed: int = 3
    train_lambda: float = 2.0
    ckpt: str = ""

    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(int(h) for h in self.hidden)


@dataclass
class SimOptions:
    horizon: int = 1000
    solver: str = "greedy"  # greedy | ip | ppo
    record_events: bool = True


@dataclass
class ExperimentOptions:
    lambdas: tuple[float, ...] = (0.5, 1.0, 2.0, 3.0, 4.0)
    replications: int = 20
    solvers: tuple[str, ...] = ("greedy", "ip")
    out: str = "results.csv"


@dataclass
class Config:
    """Full configuration tree; sections mirror the config-file layout."""

    topology: TopologyConfig = field(default_factory=TopologyConfig)
    demand: DemandConfig = field(default_factory=DemandConfig)
    slicing: SlicingConfig = field(default_factory=SlicingConfig)
    greedy: GreedyConfig = field(default_factory=GreedyConfig)
    ip: IpConfig = field(default_factory=IpConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    sim: SimOptions = field(default_factory=SimOptions)
    experiment: ExperimentOptions = field(default_factory=ExperimentOptions)


# config-file key -> dataclass field, where the names differ
_KEY_ALIASES = {
    ("demand", "lambda"): "lam",
    ("ppo", "lr"): "learning_rate",
}

_CHOICE_FIELDS = {
    ("slicing", "fairness_denominator"): ("links", "slices"),
    ("greedy", "improvement"): ("strict_both", "either", "weighted_sum"),
    ("ip", "mode"): ("lex", "weighted"),
    ("ppo", "reward"): ("shaped", "literal"),
    ("ppo", "optimizer"): ("adam", "sgd"),
    ("ppo", "eval_mode"): ("threshold", "sample"),
    ("sim", "solver"): ("greedy", "ip", "ppo"),
}


def _parse_scalar(raw: str, like, where: str):
    raw = raw.strip()
    try:
        if isinstance(like, bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, tuple):
            parts = [p for p in raw.replace(",", " ").split() if p]
            if not parts:
                raise ValueError("empty list")
            elem = like[0] if like else 0.0
            return tuple(_parse_scalar(p, elem, where) for p in parts)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(path: str) -> Config:
    """Load a sectioned key=value config file; unknown sections/keys are errors."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    cfg = Config()
    known_sections = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for section in parser.sections():
        if section not in known_sections:
            raise ConfigError(
                f"{path}: unknown section [{section}] (known: {', '.join(sorted(known_sections))})"
            )
        target = known_sections[section]
        field_map = {f.name: f for f in fields(target)}
        for key, raw in parser.items(section):
            name = _KEY_ALIASES.get((section, key), key)
            if name not in field_map:
                raise ConfigError(f"{path}: unknown key '{key}' in section [{section}]")
            where = f"{path}: [{section}] {key}"
            value = _parse_scalar(raw, getattr(target, name), where)
            choices = _CHOICE_FIELDS.get((section, name))
            if choices and value not in choices:
                raise ConfigError(f"{where}: must be one of {', '.join(choices)}")
            setattr(target, name, value)
    _validate(cfg, path)
    return cfg


def _validate(cfg: Config, path: str) -> None:
    if cfg.sim.horizon < 1:
        raise ConfigError(f"{path}: [sim] horizon must be >= 1")
    if cfg.demand.lam < 0:
        raise ConfigError(f"{path}: [demand] lambda must be >= 0")
    if cfg.experiment.replications < 1:
        raise ConfigError(f"{path}: [experiment] replications must be >= 1")
    if not cfg.experiment.lambdas:
        raise ConfigError(f"{path}: [experiment] lambdas must be non-empty")
    if not cfg.experiment.solvers:
        raise ConfigError(f"{path}: [experiment] solvers must be non-empty")
    for s in cfg.experiment.solvers:
        if s not in ("greedy", "ip", "ppo"):
            raise ConfigError(f"{path}: [experiment] unknown solver '{s}'")
    if cfg.slicing.max_paths < 1:
        raise ConfigError(f"{path}: [slicing] max_paths must be >= 1")
    if not 0.0 <= cfg.ppo.gamma <= 1.0:
        raise ConfigError(f"{path}: [ppo] gamma must lie in [0, 1]")
    for section, w1, w2 in (("ip", cfg.ip.w1, cfg.ip.w2), ("greedy", cfg.greedy.w1, cfg.greedy.w2)):
        if w1 < 0 or w2 < 0:
            # the solver's pruning bound assumes non-negative weights
            raise ConfigError(f"{path}: [{section}] w1/w2 must be >= 0")
    if cfg.ppo.queue_slots < 1 or cfg.ppo.minibatch < 1 or cfg.ppo.rollout < 1:
        raise ConfigError(f"{path}: [ppo] queue_slots, minibatch and rollout must be >= 1")
    if cfg.ip.node_limit < 1:
        raise ConfigError(f"{path}: [ip] node_limit must be >= 1")


def max_hops_for(cfg: Config) -> int | None:
    return cfg.slicing.max_hops if cfg.slicing.max_hops > 0 else None
