from typing import NamedTuple, Union

import numpy as np

from ..util import ShapeError
from .measures import procrustes_distance
from .preprocess import as_array
from .response import ResponseMatrix


class NoiseFloor(NamedTuple):
    """``data_data``: distances between disjoint reference subsamples;
    ``model_data``: distances between a reference subsample and the model."""

    data_data: np.ndarray
    model_data: np.ndarray

    def summary(self) -> dict:
        return {
            "data_data_mean": float(self.data_data.mean()),
            "data_data_std": float(self.data_data.std(ddof=1)) if self.data_data.size > 1 else 0.0,
            "model_data_mean": float(self.model_data.mean()),
            "model_data_std": float(self.model_data.std(ddof=1)) if self.model_data.size > 1 else 0.0,
        }


def noise_floor(
    reference: Union[np.ndarray, ResponseMatrix],
    model: Union[np.ndarray, ResponseMatrix],
    n_sample: int,
    n_repeats: int,
    seed: int,
    center: bool = True,
) -> NoiseFloor:
    """Split the reference units into two disjoint groups of ``n_sample`` per
    repeat; compare the groups with each other and the first group with
    ``n_sample`` model units."""
    data, model_data = as_array(reference), as_array(model)
    if data.shape[0] != model_data.shape[0]:
        raise ShapeError(f"row counts differ: {data.shape[0]} vs {model_data.shape[0]}")
    if n_sample < 1 or 2 * n_sample > data.shape[1]:
        raise ShapeError(f"need 2 x {n_sample} reference units, have {data.shape[1]}")
    if n_sample > model_data.shape[1]:
        raise ShapeError(f"need {n_sample} model units, have {model_data.shape[1]}")

    rng = np.random.default_rng(seed)
    data_data = np.empty(n_repeats)
    model_to_data = np.empty(n_repeats)
    for repeat in range(n_repeats):
        order = rng.permutation(data.shape[1])
        first, second = order[:n_sample], order[n_sample : 2 * n_sample]
        units = rng.choice(model_data.shape[1], size=n_sample, replace=False)
        data_data[repeat] = procrustes_distance(data[:, first], data[:, second], center)
        model_to_data[repeat] = procrustes_distance(data[:, first], model_data[:, units], center)
    return NoiseFloor(data_data, model_to_data)
