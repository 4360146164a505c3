from typing import Dict, Optional, Sequence, Tuple
import os

from ..network import NetworkConfig
from ..rule import RULES, LearningRule, make_rule
from ..similarity import Measure
from ..task import TaskSpec, make_task
from ..util import ConfigHandler, ConfigurationError, RuleSimObject

SECTIONS = ("network", "task", "training", "similarity", "sweep", "gallery", "toy")


class TrainingConfig(RuleSimObject):
    def __init__(
        self,
        rule: str = "bptt",
        truncation_k: int = 10,
        sigma: float = 0.01,
        es_samples: int = 50,
        mu: float = 0.25,
        s_max: int = 5,
        feedback: str = "exact",
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        batch_size: int = 100,
        iterations: Optional[int] = None,
        eval_every: int = 25,
        clip_norm: Optional[float] = 1.0,
        seed: int = 0,
        log_grad_alignment: bool = False,
    ) -> None:
        self.rule = rule
        self.truncation_k = truncation_k
        self.sigma = sigma
        self.es_samples = es_samples
        self.mu = mu
        self.s_max = s_max
        self.feedback = feedback
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.batch_size = batch_size
        self.iterations = iterations
        self.eval_every = eval_every
        self.clip_norm = clip_norm
        self.seed = seed
        self.log_grad_alignment = log_grad_alignment

    def validate(self) -> None:
        if self.rule not in RULES:
            raise ConfigurationError(f"unknown rule {self.rule!r}, choose from {sorted(RULES)}")
        if self.feedback not in ("exact", "random"):
            raise ConfigurationError(f"feedback must be 'exact' or 'random', got {self.feedback!r}")
        if self.lr <= 0:
            raise ConfigurationError(f"{self.lr=} must be > 0")
        if self.batch_size < 1:
            raise ConfigurationError(f"{self.batch_size=} must be >= 1")
        if self.eval_every < 1:
            raise ConfigurationError(f"{self.eval_every=} must be >= 1")
        if self.iterations is not None and self.iterations < 0:
            raise ConfigurationError(f"{self.iterations=} must be >= 0")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigurationError(f"{self.clip_norm=} must be > 0")
        if self.rule in ("nodep", "es") and self.sigma <= 0:
            raise ConfigurationError(f"{self.sigma=} must be > 0")
        if self.rule == "es" and self.es_samples < 1:
            raise ConfigurationError(f"{self.es_samples=} must be >= 1")

    def make_rule(self) -> LearningRule:
        return make_rule(
            self.rule, self.truncation_k, self.sigma, self.es_samples, self.mu, self.s_max
        )


class SimilarityConfig(RuleSimObject):
    def __init__(
        self,
        reference: Optional[str] = None,
        compare: str = "rates",
        measures: Tuple[str, ...] = ("procrustes", "cka", "cca"),
        center: bool = True,
        cca_rank: int = 20,
        eval_trials_per_condition: int = 4,
    ) -> None:
        self.reference = reference
        self.compare = compare
        self.measures = tuple(measures)
        self.center = center
        self.cca_rank = cca_rank
        self.eval_trials_per_condition = eval_trials_per_condition

    def validate(self) -> None:
        if self.compare not in ("rates", "states"):
            raise ConfigurationError(f"compare must be 'rates' or 'states', got {self.compare!r}")
        for measure in self.measures:
            try:
                Measure(measure)
            except ValueError:
                raise ConfigurationError(f"unknown similarity measure {measure!r}")
        if self.eval_trials_per_condition < 1:
            raise ConfigurationError(f"{self.eval_trials_per_condition=} must be >= 1")


class ExperimentConfig(RuleSimObject):
    """The resolved ``network``, ``task``, ``training`` and ``similarity`` sections."""

    def __init__(
        self,
        network: NetworkConfig,
        task: TaskSpec,
        training: TrainingConfig,
        similarity: SimilarityConfig,
    ) -> None:
        self.task = task
        self.network = network.with_task_defaults(
            task.n_inputs, task.n_outputs, task.default_neurons, task.dt
        )
        self.training = training
        if training.iterations is None:
            self.training = TrainingConfig.from_config_dict(
                {**training.get_config_dict(), "iterations": task.default_iterations}
            )
        self.similarity = similarity
        self.network.validate()
        self.training.validate()
        self.similarity.validate()
        if self.network.n_inputs != task.n_inputs or self.network.n_outputs != task.n_outputs:
            raise ConfigurationError(
                f"network has {self.network.n_inputs} inputs / {self.network.n_outputs} outputs, "
                f"task needs {task.n_inputs} / {task.n_outputs}"
            )

    @property
    def config_hash(self) -> str:
        return ConfigHandler().config_hash(self.get_config_dict())

    def get_config_dict(self) -> Dict:
        return {
            "network": self.network.get_config_dict(),
            "task": self.task.get_config_dict(),
            "training": self.training.get_config_dict(),
            "similarity": self.similarity.get_config_dict(),
        }

    @classmethod
    def from_config_dict(cls, config_dict: Dict) -> "ExperimentConfig":
        config_dict = config_dict or {}
        unknown = [key for key in config_dict if key not in SECTIONS]
        if unknown:
            raise ConfigurationError(f"unknown config section(s) {unknown}, allowed: {SECTIONS}")
        return cls(
            NetworkConfig.from_config_dict(config_dict.get("network") or {}),
            make_task(config_dict.get("task") or {}),
            TrainingConfig.from_config_dict(config_dict.get("training") or {}),
            SimilarityConfig.from_config_dict(config_dict.get("similarity") or {}),
        )

    @classmethod
    def from_config_file(cls, config_file: str, section: Optional[str] = None):
        config_dict = ConfigHandler().load_config_dict(config_file)
        return cls.from_config_dict(config_dict)

    def with_overrides(self, **sections: Dict) -> "ExperimentConfig":
        """Copy with keys replaced per section, e.g. ``training={"seed": 3}``."""
        config_dict = self.get_config_dict()
        for section, overrides in sections.items():
            if section not in config_dict:
                raise ConfigurationError(f"unknown config section {section!r}")
            config_dict[section].update(overrides)
        return ExperimentConfig.from_config_dict(config_dict)


def resolve_out_dir(cli_value: Optional[str], default: str = "results") -> str:
    return cli_value or os.environ.get("RULESIM_OUT_DIR") or default


def resolve_n_worker(cli_value: Optional[int], default: int = 1) -> int:
    if cli_value is not None:
        return cli_value
    env_value = os.environ.get("RULESIM_N_WORKER")
    if env_value is None:
        return default
    try:
        return int(env_value)
    except ValueError:
        raise ConfigurationError(f"RULESIM_N_WORKER={env_value!r} is not an integer")


class ToyConfig(RuleSimObject):
    def __init__(
        self,
        coeffs: Sequence[float] = (1.0, -0.5),
        tau: float = 1.0,
        rule: str = "eprop",
        w0: float = 0.0,
        grid: Optional[Sequence[float]] = None,
        dt: float = 1e-3,
        steps: int = 1_000_000,
        output_tol: float = 1e-10,
        step_tol: float = 1e-12,
        divergence_threshold: float = 1e6,
    ) -> None:
        self.coeffs = [float(c) for c in coeffs]
        self.tau = tau
        self.rule = rule
        self.w0 = w0
        self.grid = None if grid is None else [float(w) for w in grid]
        self.dt = dt
        self.steps = steps
        self.output_tol = output_tol
        self.step_tol = step_tol
        self.divergence_threshold = divergence_threshold
