"""Configs for the Exo-MDP experiments.

Every experiment type has a default parameter dictionary. An ExperimentConfig
is built as default dict, then the JSON config file, then CLI flags, and is
serialized back with every default filled in.
"""

# python modules
import copy
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

# our modules
from configs import settings
from exo_mdp.environments import STORAGE_DEFAULTS
from exo_mdp.errors import ConfigError
from exo_mdp.kernels import SUPPORTED_MEMORY
from exo_mdp.tabular_planner import DEFAULT_POLICY_CAP

logger = logging.getLogger(__name__)

EXPERIMENT_TYPES = ("tabular", "storage", "bandit", "peg")

VALID_ALGORITHMS = {
    "tabular": ("pto", "pto_opt", "pto_lite", "ftl_erm"),
    "storage": ("lsvi_pe", "lsvi_opt", "lsvi_lite"),
    "bandit": ("ftl", "ucb"),
    "peg": ("peg",),
}

LITE_ALGORITHMS = ("pto_lite", "lsvi_lite")

REGRET_MODES = ("summed", "fixed")

# Random tabular Exo-MDP, uniform rewards and Dirichlet kernel rows
tabular_example = {
    "experiment": "tabular",
    "algorithms": ["pto", "pto_opt", "pto_lite"],
    "episodes": 250,
    "seeds": list(range(20)),
    "environment": {
        "num_x": 5,
        "num_xi": 5,
        "num_a": 3,
        "horizon": 5,
        "dirichlet_alpha": 1.0,  # uniform over the simplex
    },
    "c": 0.3,  # optimism scale of pto_opt
    "delta": 0.01,
    "subsample_ratios": [0.2, 0.5, 0.8],
    "policy_cap": DEFAULT_POLICY_CAP,  # ftl_erm only
    "memory": 1,
    "regret_mode": "summed",
    "x1": 0,  # start state of the simulated episodes and of fixed-mode regret
    "xi1": 0,  # fixed-mode regret only
    "record_wall_time": False,
}

# Storage control with a Markov price, Case I (H = 6)
storage_example = {
    "experiment": "storage",
    "algorithms": ["lsvi_pe", "lsvi_opt", "lsvi_lite"],
    "episodes": 100,
    "seeds": list(range(20)),
    "environment": {
        "horizon": 6,
        "num_prices": 10,
        "num_anchors": 10,
        "num_rollouts": 200,  # per start level and episode
        "eval_grid": [0.0, 5.0],  # initial storage levels of the rollouts
        "oracle_anchor_factor": 4,  # oracle anchors = factor * (num_anchors - 1) + 1
        "overrides": {},  # keys of STORAGE_DEFAULTS
    },
    "c": 0.5,
    "delta": 0.01,
    "subsample_ratios": [0.2, 0.5, 0.8],
    "policy_cap": DEFAULT_POLICY_CAP,
    "memory": 1,
    "regret_mode": "summed",
    "x1": 0,
    "xi1": 0,
    "record_wall_time": False,
}

# Full-feedback Exo-bandit, one arm 0.2 better than the others
bandit_example = {
    "experiment": "bandit",
    "algorithms": ["ftl", "ucb"],
    "episodes": 500,
    "seeds": list(range(100)),
    "environment": {
        "num_arms": 5,
        "gap": 0.2,
        "num_xi": 10,
    },
    "c": 0.0,
    "delta": 0.01,
    "subsample_ratios": [],
    "policy_cap": DEFAULT_POLICY_CAP,
    "memory": 1,
    "regret_mode": "summed",
    "x1": 0,
    "xi1": 0,
    "record_wall_time": False,
}

# Partial-feedback greedy on two Bernoulli arms
peg_example = {
    "experiment": "peg",
    "algorithms": ["peg"],
    "episodes": 1000,  # rounds T
    "seeds": [0],
    "environment": {
        "means": [0.75, 0.5],
        "warm_start": 1,
        "runs": 10000,  # independent runs per seed
    },
    "c": 0.0,
    "delta": 0.01,
    "subsample_ratios": [],
    "policy_cap": DEFAULT_POLICY_CAP,
    "memory": 1,
    "regret_mode": "summed",
    "x1": 0,
    "xi1": 0,
    "record_wall_time": False,
}

DEFAULT_CONFIGS = {
    "tabular": tabular_example,
    "storage": storage_example,
    "bandit": bandit_example,
    "peg": peg_example,
}


def _merge(defaults: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Recursive dict merge, overrides win."""
    merged = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "overrides":
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully materialized experiment configuration."""

    experiment: str
    algorithms: list[str]
    episodes: int
    seeds: list[int]
    environment: dict[str, Any]
    c: float
    delta: float
    subsample_ratios: list[float]
    policy_cap: int
    memory: int
    regret_mode: str
    x1: int
    xi1: int
    record_wall_time: bool
    out_dir: str = field(default_factory=lambda: settings.RESULTS_DIR)
    n_jobs: int = field(default_factory=lambda: settings.N_JOBS)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        experiment = data.get("experiment")
        if experiment not in DEFAULT_CONFIGS:
            raise ConfigError("experiment", f"must be one of {list(EXPERIMENT_TYPES)}, got {experiment!r}")
        merged = _merge(DEFAULT_CONFIGS[experiment], data)
        unknown = set(merged) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config field")
        try:
            cfg = cls(**merged)
        except TypeError as e:
            raise ConfigError("experiment", str(e)) from e
        cfg.validate()
        return cfg

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        """Copy with the non-None changes applied, validated."""
        changes = {key: value for key, value in changes.items() if value is not None}
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        valid = VALID_ALGORITHMS[self.experiment]
        if not self.algorithms:
            raise ConfigError("algorithms", "at least one algorithm is required")
        for name in self.algorithms:
            if name not in valid:
                raise ConfigError("algorithms", f"'{name}' is not valid for {self.experiment}, choose from {list(valid)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms", "duplicate algorithm names")
        if not isinstance(self.episodes, int) or self.episodes < 1:
            raise ConfigError("episodes", f"must be an integer >= 1, got {self.episodes!r}")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if any(not isinstance(seed, int) or seed < 0 for seed in self.seeds):
            raise ConfigError("seeds", f"seeds must be nonnegative integers, got {self.seeds}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds", "duplicate seeds")
        if self.c < 0:
            raise ConfigError("c", f"must be nonnegative, got {self.c}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta", f"must lie in (0, 1), got {self.delta}")
        if any(name in LITE_ALGORITHMS for name in self.algorithms):
            if not self.subsample_ratios:
                raise ConfigError("subsample_ratios", "lite algorithms need at least one ratio")
            for ratio in self.subsample_ratios:
                if not 0.0 < ratio <= 1.0:
                    raise ConfigError("subsample_ratios", f"ratio {ratio} must lie in (0, 1]")
        if self.memory not in SUPPORTED_MEMORY:
            raise ConfigError("memory", f"exogenous memory {self.memory} is not supported, use one of {SUPPORTED_MEMORY}")
        if self.regret_mode not in REGRET_MODES:
            raise ConfigError("regret_mode", f"must be one of {list(REGRET_MODES)}, got {self.regret_mode!r}")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs", "must be nonzero")
        self._validate_environment()

    def _validate_environment(self) -> None:
        env = self.environment
        unknown = set(env) - set(DEFAULT_CONFIGS[self.experiment]["environment"])
        if unknown:
            raise ConfigError("environment", f"unknown keys {sorted(unknown)}")
        if self.experiment == "tabular":
            for key in ("num_x", "num_xi", "num_a", "horizon"):
                if env[key] < 1:
                    raise ConfigError(f"environment.{key}", f"must be >= 1, got {env[key]}")
            if env["dirichlet_alpha"] <= 0:
                raise ConfigError("environment.dirichlet_alpha", "must be positive")
            if not 0 <= self.x1 < env["num_x"]:
                raise ConfigError("x1", f"must lie in [0, {env['num_x']})")
            if not 0 <= self.xi1 < env["num_xi"]:
                raise ConfigError("xi1", f"must lie in [0, {env['num_xi']})")
            if "ftl_erm" in self.algorithms:
                required = env["num_a"] ** (env["horizon"] * env["num_x"] * env["num_xi"])
                if required > self.policy_cap:
                    raise ConfigError(
                        "policy_cap",
                        f"ftl_erm needs policy_cap >= {required} for this instance, got {self.policy_cap}",
                    )
        elif self.experiment == "storage":
            if env["horizon"] < 1:
                raise ConfigError("environment.horizon", "must be >= 1")
            if env["num_prices"] < 2:
                raise ConfigError("environment.num_prices", "need at least 2 prices")
            if env["num_anchors"] < 2:
                raise ConfigError("environment.num_anchors", "need at least 2 anchors")
            if env["num_rollouts"] < 1:
                raise ConfigError("environment.num_rollouts", "must be >= 1")
            if not env["eval_grid"]:
                raise ConfigError("environment.eval_grid", "need at least one start level")
            if env["oracle_anchor_factor"] < 1:
                raise ConfigError("environment.oracle_anchor_factor", "must be >= 1")
            unknown = set(env["overrides"]) - set(STORAGE_DEFAULTS)
            if unknown:
                raise ConfigError("environment.overrides", f"unknown storage parameters {sorted(unknown)}")
        elif self.experiment == "bandit":
            if env["num_arms"] < 2:
                raise ConfigError("environment.num_arms", "need at least 2 arms")
            if not 0.0 < env["gap"] <= 0.5:
                raise ConfigError("environment.gap", f"must lie in (0, 0.5], got {env['gap']}")
        else:
            if len(env["means"]) < 2:
                raise ConfigError("environment.means", "need at least 2 arms")
            if env["warm_start"] < 1:
                raise ConfigError("environment.warm_start", "must be >= 1")
            if env["runs"] < 1:
                raise ConfigError("environment.runs", "must be >= 1")
            if self.episodes < len(env["means"]) * env["warm_start"]:
                raise ConfigError("episodes", "must cover the warm-start pulls")


def default_config(experiment: str) -> ExperimentConfig:
    return ExperimentConfig.from_dict({"experiment": experiment})


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a JSON config file; a metadata sidecar is accepted too."""
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("<file>", f"{path} must hold a JSON object")
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    logger.info(f"Loaded config from {path}")
    return ExperimentConfig.from_dict(data)


def parse_seeds(text: str) -> list[int]:
    """'a..b' (inclusive) or a comma separated list."""
    try:
        if ".." in text:
            first, last = text.split("..", 1)
            seeds = list(range(int(first), int(last) + 1))
        else:
            seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError("seeds", f"cannot parse '{text}', use a..b or a,b,c") from e
    if not seeds:
        raise ConfigError("seeds", f"'{text}' selects no seed")
    return seeds


def storage_case_i_configs(**changes: Any) -> list[ExperimentConfig]:
    """Storage Case I, H in {6, 8, 10} with R = N = 10 and K = 100."""
    return [
        ExperimentConfig.from_dict(
            _merge({"experiment": "storage", "environment": {"horizon": horizon}}, changes)
        )
        for horizon in (6, 8, 10)
    ]


def storage_case_ii_configs(**changes: Any) -> list[ExperimentConfig]:
    """Storage Case II, (H, R, N) in {(20, 20, 20), (30, 30, 30), (40, 40, 40)} with K = 200."""
    return [
        ExperimentConfig.from_dict(
            _merge(
                {
                    "experiment": "storage",
                    "episodes": 200,
                    "environment": {"horizon": size, "num_prices": size, "num_anchors": size},
                },
                changes,
            )
        )
        for size in (20, 30, 40)
    ]
