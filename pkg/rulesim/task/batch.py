from typing import NamedTuple, Union

import numpy as np
import torch

from ..util import DegenerateInputError


class TrialBatch(NamedTuple):
    """Inputs, targets and loss masks of a batch of trials.

    ``targets`` is ``(B, T, N_out)`` for regression tasks and a ``(B,)`` tensor of
    class indices for classification tasks.
    """

    inputs: torch.Tensor
    targets: torch.Tensor
    loss_mask: torch.Tensor
    condition_ids: torch.Tensor

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]

    @property
    def n_steps(self) -> int:
        return self.inputs.shape[1]

    @property
    def is_classification(self) -> bool:
        return self.targets.dim() == 1

    def to(self, dtype: torch.dtype) -> "TrialBatch":
        targets = self.targets if self.is_classification else self.targets.to(dtype)
        return TrialBatch(
            self.inputs.to(dtype),
            targets,
            self.loss_mask.to(dtype),
            self.condition_ids,
        )

    def select(self, index: Union[np.ndarray, torch.Tensor, slice]) -> "TrialBatch":
        return TrialBatch(
            self.inputs[index],
            self.targets[index],
            self.loss_mask[index],
            self.condition_ids[index],
        )

    def validate(self) -> "TrialBatch":
        mask = self.loss_mask
        if not torch.all((mask == 0) | (mask == 1)):
            raise DegenerateInputError("loss_mask entries must be 0 or 1")
        empty = (mask.sum(dim=1) == 0).nonzero().flatten().tolist()
        if empty:
            raise DegenerateInputError(f"trials {empty} have an all-zero loss_mask")
        return self
