from typing import Sequence, Union

import numpy as np
import torch

from ..similarity import ResponseMatrix
from ..util import DegenerateInputError, ShapeError


def trial_average(
    trials: Union[np.ndarray, torch.Tensor, Sequence[np.ndarray]],
    condition_ids: Union[np.ndarray, torch.Tensor, Sequence[int]],
    source: str = "model",
) -> ResponseMatrix:
    """Mean over trials of each condition, stacked in ascending condition order."""
    if isinstance(trials, torch.Tensor):
        trials = trials.detach().cpu().numpy()
    trials = np.asarray(trials, dtype=np.float64)
    condition_ids = np.asarray(condition_ids)
    if trials.ndim != 3:
        raise ShapeError(f"trials must be (trials, steps, units), got {trials.shape}")
    if trials.shape[0] == 0:
        raise DegenerateInputError("no trials to average")
    if condition_ids.shape != (trials.shape[0],):
        raise ShapeError(f"{condition_ids.shape[0]} condition ids for {trials.shape[0]} trials")

    conditions = np.unique(condition_ids)
    averaged = np.stack([trials[condition_ids == c].mean(axis=0) for c in conditions])
    return ResponseMatrix.from_array(averaged, source)
