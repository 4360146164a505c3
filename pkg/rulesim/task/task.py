from abc import ABC, abstractmethod
from typing import Dict, Sequence, Tuple

import numpy as np
import torch

from ..util import ConfigurationError, RuleSimObject
from .batch import TrialBatch


def epoch_steps(duration: float, dt: float) -> int:
    # round half up, so 350 ms at dt=50 gives 7 steps
    return int(np.floor(duration / dt + 0.5))


class TaskSpec(RuleSimObject, ABC):
    kind: str = ""
    loss_kind: str = "mse"
    default_neurons: int = 200
    default_iterations: int = 1000

    @property
    @abstractmethod
    def n_steps(self) -> int:
        ...

    @property
    @abstractmethod
    def n_inputs(self) -> int:
        ...

    @property
    @abstractmethod
    def n_outputs(self) -> int:
        ...

    @property
    @abstractmethod
    def n_conditions(self) -> int:
        ...

    @property
    def response_window(self) -> Tuple[int, int]:
        return 0, self.n_steps

    @abstractmethod
    def condition_trials(self, condition_ids: Sequence[int], seed: int) -> TrialBatch:
        """Trials for the given condition ids, noise drawn from ``seed``."""

    def generate(self, batch_size: int, seed: int) -> TrialBatch:
        if batch_size < 1:
            raise ConfigurationError(f"{batch_size=} must be >= 1")
        rng = np.random.default_rng(seed)
        condition_ids = rng.integers(self.n_conditions, size=batch_size)
        return self.condition_trials(condition_ids, int(rng.integers(2**62)))

    def evaluation_batch(self, trials_per_condition: int, seed: int) -> TrialBatch:
        condition_ids = np.repeat(np.arange(self.n_conditions), trials_per_condition)
        return self.condition_trials(condition_ids, seed)

    def get_config_dict(self) -> Dict:
        config_dict = {"kind": self.kind}
        config_dict.update(super().get_config_dict())
        return config_dict

    @staticmethod
    def _to_batch(
        inputs: np.ndarray,
        targets: np.ndarray,
        loss_mask: np.ndarray,
        condition_ids: np.ndarray,
    ) -> TrialBatch:
        target_tensor = torch.as_tensor(targets)
        if target_tensor.dim() == 1:
            target_tensor = target_tensor.to(torch.long)
        else:
            target_tensor = target_tensor.to(torch.float64)
        return TrialBatch(
            torch.as_tensor(inputs, dtype=torch.float64),
            target_tensor,
            torch.as_tensor(loss_mask, dtype=torch.float64),
            torch.as_tensor(np.asarray(condition_ids), dtype=torch.long),
        )
