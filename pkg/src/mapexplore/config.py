"""Run configuration and the plain-text ``key = value`` config format.

Lines starting with ``#`` are comments.  Keys mirror the hyperparameter
names (n, alpha, beta, lambda, r, F, G, R, k, mu, batch_size,
episode_length, gamma, learning_rate) plus the run-level keys documented
in the README.  List values are comma separated.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class ExploreConfig:
    # structured map
    n: int = 4
    alpha: float = 0.18
    beta: float = 1.0
    lam: int = 3
    r: float = 0.1
    F: int = 32
    G: int = 64
    # boundary pipeline
    R: float = 1.0
    k: int = 3
    bandwidth: float | None = None
    # reward / episode
    mu: float = 0.02
    episode_length: int = 40
    complete_threshold: float = 0.99
    max_retries: int = 5
    use_aou: bool = True
    # robot and sensor
    fov_deg: float = 180.0
    max_range: float = 8.0
    beam_count: int = 361
    noise_sigma: float = 0.02
    speed: float = 0.45
    decision_cost: float = 0.3
    scan_spacing: float = 1.0
    inflation: int = 2
    jitter_sigma: float = 0.0
    random_start: bool = True


@dataclass
class PpoConfig:
    gamma: float = 0.99
    learning_rate: float = 0.00025
    batch_size: int = 32
    clip_epsilon: float = 0.2
    gae_lambda: float = 0.95
    epochs_per_batch: int = 4
    entropy_coeff: float = 0.01
    value_coeff: float = 0.5
    max_grad_norm: float = 0.5

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must lie in (0, 1]")
        if self.clip_epsilon <= 0:
            raise ConfigError("clip_epsilon must be positive")


@dataclass
class RunConfig:
    """Everything a CLI invocation may set."""

    explore: ExploreConfig = field(default_factory=ExploreConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    worlds: list[str] = field(default_factory=list)
    strategies: list[str] = field(default_factory=lambda: ["nearest-frontier"])
    runs: int = 10
    seed: int = 0
    seeds: list[int] = field(default_factory=list)
    total_episodes: int = 1000
    max_updates: int = 0
    checkpoint: str = ""
    checkpoint_every: int = 20
    plateau: bool = True
    out: str = "out"
    n_values: list[int] = field(default_factory=lambda: [2, 4, 8])
    snapshots: int = 20
    aou_strategy: str = "random"
    workers: int = 1
    base_dir: Path = Path(".")

    def run_seeds(self) -> list[int]:
        return self.seeds if self.seeds else [self.seed + i for i in range(self.runs)]

    def world_paths(self) -> list[Path]:
        from .worlds import resolve_world

        return [resolve_world(w, self.base_dir) for w in self.worlds]


_ALIASES = {"lambda": "lam", "world": "worlds", "strategy": "strategies"}


def _coerce(value: str, annotation, key: str):
    ann = str(annotation)
    try:
        if ann.startswith("list[int]"):
            return [int(v) for v in value.split(",") if v.strip()]
        if ann.startswith("list[str]"):
            return [v.strip() for v in value.split(",") if v.strip()]
        if "bool" in ann:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if "float | None" in ann:
            return None if value.strip().lower() in ("", "none", "auto") else float(value)
        if "int" in ann:
            return int(value)
        if "float" in ann:
            return float(value)
        return value.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    cfg = RunConfig(base_dir=Path(base_dir))
    sections = {
        "explore": {f.name: f for f in dataclasses.fields(ExploreConfig)},
        "ppo": {f.name: f for f in dataclasses.fields(PpoConfig)},
    }
    top = {f.name: f for f in dataclasses.fields(RunConfig) if f.name not in ("explore", "ppo", "base_dir")}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key in sections["explore"]:
            setattr(cfg.explore, key, _coerce(value, sections["explore"][key].type, key))
        elif key in sections["ppo"]:
            setattr(cfg.ppo, key, _coerce(value, sections["ppo"][key].type, key))
        elif key in top:
            setattr(cfg, key, _coerce(value, top[key].type, key))
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    cfg.ppo.__post_init__()
    if cfg.runs < 1:
        raise ConfigError("runs must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), path.parent)
