from typing import Optional

import torch

from ..network import LossKind, NetworkParams, StateTrajectory
from ..task.batch import TrialBatch
from ..util import ConfigurationError
from .rule import (
    GradientSet,
    LearningRule,
    forward_and_signal,
    mask_recurrent,
    readout_gradient,
)


def _hop(params: NetworkParams, derivatives: torch.Tensor, u: torch.Tensor, index: int):
    # u ∂h[index + 1]/∂h[index]
    beta = params.beta
    return beta * u + (1 - beta) * derivatives[:, index] * (u @ params.w_h)


def backward_errors(
    params: NetworkParams, trajectory: StateTrajectory, signal: torch.Tensor
) -> torch.Tensor:
    """Total error δ_t = dL/dh_t through the full recurrence."""
    derivatives = trajectory.derivatives()
    n_steps = signal.shape[1]
    delta = torch.empty_like(signal)
    delta[:, -1] = signal[:, -1]
    for index in range(n_steps - 2, -1, -1):
        delta[:, index] = signal[:, index] + _hop(params, derivatives, delta[:, index + 1], index)
    return delta


def truncated_backward_errors(
    params: NetworkParams,
    trajectory: StateTrajectory,
    signal: torch.Tensor,
    truncation_k: int,
) -> torch.Tensor:
    """Errors where each loss step backpropagates through at most K − 1
    recurrent hops; the leak path beyond the window is kept."""
    derivatives = trajectory.derivatives()
    n_steps = signal.shape[1]
    beta = params.beta
    delta = signal.clone()
    boundary = torch.zeros_like(signal)
    for t in range(n_steps):
        u = signal[:, t]
        for index in range(t - 1, max(t - truncation_k, -1), -1):
            u = _hop(params, derivatives, u, index)
            delta[:, index] += u
        window_start = t - truncation_k + 1
        if window_start >= 0:
            boundary[:, window_start] = u

    tail = torch.zeros_like(signal[:, 0])
    for index in range(n_steps - 2, -1, -1):
        tail = beta * (tail + boundary[:, index + 1])
        delta[:, index] += tail
    return delta


def weight_gradients(
    params: NetworkParams,
    trajectory: StateTrajectory,
    batch: TrialBatch,
    delta: torch.Tensor,
):
    scale = 1 - params.beta
    g_h = scale * torch.einsum("btn,btm->nm", delta, trajectory.presynaptic_rates())
    g_x = scale * torch.einsum("btn,btm->nm", delta, batch.inputs.to(delta.dtype))
    return g_x, mask_recurrent(params, g_h)


def bptt_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    loss_kind: LossKind = LossKind.MSE,
    feedback: Optional[torch.Tensor] = None,
) -> GradientSet:
    trajectory, _, d_outputs, signal = forward_and_signal(
        params, batch, noise_seed, loss_kind, feedback
    )
    delta = backward_errors(params, trajectory, signal)
    g_x, g_h = weight_gradients(params, trajectory, batch, delta)
    return GradientSet(g_x, g_h, readout_gradient(trajectory, d_outputs), "bptt")


def truncated_bptt_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    truncation_k: int,
    loss_kind: LossKind = LossKind.MSE,
    feedback: Optional[torch.Tensor] = None,
) -> GradientSet:
    if not 1 <= truncation_k <= batch.n_steps:
        raise ConfigurationError(
            f"truncation_k={truncation_k} must lie in [1, {batch.n_steps}]"
        )
    trajectory, _, d_outputs, signal = forward_and_signal(
        params, batch, noise_seed, loss_kind, feedback
    )
    delta = truncated_backward_errors(params, trajectory, signal, truncation_k)
    g_x, g_h = weight_gradients(params, trajectory, batch, delta)
    return GradientSet(g_x, g_h, readout_gradient(trajectory, d_outputs), "tbptt")


class BPTT(LearningRule):
    tag = "bptt"

    def __init__(self) -> None:
        pass

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return bptt_gradient(params, batch, noise_seed, loss_kind, feedback)


class TruncatedBPTT(LearningRule):
    tag = "tbptt"

    def __init__(self, truncation_k: int = 10) -> None:
        self.truncation_k = truncation_k

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return truncated_bptt_gradient(
            params, batch, noise_seed, self.truncation_k, loss_kind, feedback
        )
