from enum import Enum
from typing import Optional, Tuple

import torch
import torch.nn.functional as F

from ..task.batch import TrialBatch
from ..util import DegenerateInputError, ShapeError
from .network import NetworkParams, StateTrajectory


class LossKind(str, Enum):
    MSE = "mse"
    CROSS_ENTROPY = "cross-entropy"


def _check_mask(loss_mask: torch.Tensor) -> torch.Tensor:
    total = loss_mask.sum()
    if total == 0:
        raise DegenerateInputError("degenerate batch: the loss mask is all zero")
    return total


def _step_losses_and_grad(
    outputs: torch.Tensor, batch: TrialBatch, kind: LossKind
) -> Tuple[torch.Tensor, torch.Tensor]:
    kind = LossKind(kind)
    mask = batch.loss_mask.to(outputs.dtype)
    if mask.shape != outputs.shape[:2]:
        raise ShapeError(f"loss mask {tuple(mask.shape)} vs outputs {tuple(outputs.shape)}")
    total = _check_mask(mask)

    if kind == LossKind.MSE:
        targets = batch.targets.to(outputs.dtype)
        if targets.shape != outputs.shape:
            raise ShapeError(f"targets {tuple(targets.shape)} vs outputs {tuple(outputs.shape)}")
        count = total * outputs.shape[-1]
        diff = outputs - targets
        losses = 0.5 * mask * (diff**2).sum(dim=-1) / count
        d_outputs = mask[..., None] * diff / count
        return losses, d_outputs

    targets = batch.targets.to(torch.long)
    if targets.shape != outputs.shape[:1]:
        raise ShapeError(f"class targets {tuple(targets.shape)} vs batch {outputs.shape[0]}")
    log_probs = F.log_softmax(outputs, dim=-1)
    index = targets[:, None, None].expand(-1, outputs.shape[1], 1)
    nll = -log_probs.gather(-1, index).squeeze(-1)
    losses = mask * nll / total
    one_hot = F.one_hot(targets, outputs.shape[-1]).to(outputs.dtype)[:, None, :]
    d_outputs = mask[..., None] * (log_probs.exp() - one_hot) / total
    return losses, d_outputs


def step_losses(outputs: torch.Tensor, batch: TrialBatch, kind: LossKind) -> torch.Tensor:
    """Per (trial, step) loss contributions; they sum to the batch loss."""
    return _step_losses_and_grad(outputs, batch, kind)[0]


def readout_feedback(d_outputs: torch.Tensor, feedback: torch.Tensor) -> torch.Tensor:
    # feedback is (N, N_out); w_out.T gives the exact signal
    return d_outputs @ feedback.T


def loss_and_signal(
    params: NetworkParams,
    trajectory: StateTrajectory,
    batch: TrialBatch,
    kind: LossKind,
    feedback: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Loss, dL/dŷ and the instructive signal f'(h) ⊙ (B dL/dŷ).

    ``B`` is ``w_out.T`` unless a fixed ``feedback`` matrix is given.
    """
    losses, d_outputs = _step_losses_and_grad(trajectory.outputs, batch, kind)
    if feedback is None:
        feedback = params.w_out.T
    signal = readout_feedback(d_outputs, feedback) * trajectory.derivatives()
    return losses.sum(), d_outputs, signal


def normalized_accuracy(trajectory: StateTrajectory, batch: TrialBatch, kind: LossKind) -> float:
    """1 − MSE/Var(y) for regression, 1 − CE for classification, clamped to [0, 1]."""
    kind = LossKind(kind)
    outputs = trajectory.outputs
    if kind == LossKind.CROSS_ENTROPY:
        cross_entropy = step_losses(outputs, batch, kind).sum().item()
        return min(1.0, max(0.0, 1.0 - cross_entropy))

    mask = batch.loss_mask.to(outputs.dtype)[..., None].expand_as(outputs)
    count = _check_mask(mask)
    targets = batch.targets.to(outputs.dtype)
    mse = (mask * (outputs - targets) ** 2).sum() / count
    mean = (mask * targets).sum() / count
    variance = (mask * (targets - mean) ** 2).sum() / count
    if variance == 0:
        raise DegenerateInputError("target variance is zero, accuracy is undefined")
    return min(1.0, max(0.0, 1.0 - (mse / variance).item()))
