from abc import ABC, abstractmethod
from typing import List, NamedTuple, Optional, Tuple

import torch

from ..network import (
    LossKind,
    NetworkParams,
    StateTrajectory,
    loss_and_signal,
    rnn_forward,
)
from ..task.batch import TrialBatch
from ..util import RuleSimObject
from .feedback import feedback_alignment_signal


class GradientSet(NamedTuple):
    w_x: torch.Tensor
    w_h: torch.Tensor
    w_out: torch.Tensor
    rule_tag: str

    def tensors(self) -> List[torch.Tensor]:
        return [self.w_x, self.w_h, self.w_out]

    def flat(self) -> torch.Tensor:
        return torch.cat([tensor.flatten() for tensor in self.tensors()])

    def global_norm(self) -> float:
        return torch.linalg.vector_norm(self.flat()).item()

    def is_finite(self) -> bool:
        return bool(torch.isfinite(self.flat()).all())

    def scaled(self, factor: float) -> "GradientSet":
        return GradientSet(self.w_x * factor, self.w_h * factor, self.w_out * factor, self.rule_tag)

    def clip_norm(self, max_norm: float) -> "GradientSet":
        """Rescale to global norm ``max_norm`` if it is exceeded."""
        norm = self.global_norm()
        if norm <= max_norm:
            return self
        return self.scaled(max_norm / norm)

    def cosine_similarity(self, other: "GradientSet") -> float:
        a, b = self.flat(), other.flat()
        denominator = torch.linalg.vector_norm(a) * torch.linalg.vector_norm(b)
        if denominator == 0:
            return 0.0
        return (a @ b / denominator).item()


class LearningRule(RuleSimObject, ABC):
    tag: str = ""
    uses_exact_signal: bool = True

    @abstractmethod
    def gradient(
        self,
        params: NetworkParams,
        batch: TrialBatch,
        noise_seed: int,
        loss_kind: LossKind = LossKind.MSE,
        feedback: Optional[torch.Tensor] = None,
    ) -> GradientSet:
        ...


def forward_and_signal(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    loss_kind: LossKind,
    feedback: Optional[torch.Tensor],
) -> Tuple[StateTrajectory, torch.Tensor, torch.Tensor, torch.Tensor]:
    batch = batch.to(params.dtype)
    trajectory = rnn_forward(params, batch, noise_seed)
    loss, d_outputs, signal = loss_and_signal(params, trajectory, batch, loss_kind)
    if feedback is not None:
        signal = feedback_alignment_signal(params, feedback, d_outputs) * trajectory.derivatives()
    return trajectory, loss, d_outputs, signal


def readout_gradient(trajectory: StateTrajectory, d_outputs: torch.Tensor) -> torch.Tensor:
    return torch.einsum("bto,btn->on", d_outputs, trajectory.rates)


def mask_recurrent(params: NetworkParams, g_h: torch.Tensor) -> torch.Tensor:
    if params.sparsity_mask is None:
        return g_h
    return g_h * params.sparsity_mask
