from typing import Tuple, TypeVar, Union

import numpy as np
from scipy.stats import ortho_group

from ..util import ShapeError
from .response import ResponseMatrix

Responses = TypeVar("Responses", np.ndarray, ResponseMatrix)


def as_array(responses: Union[np.ndarray, ResponseMatrix]) -> np.ndarray:
    if isinstance(responses, ResponseMatrix):
        return responses.data
    array = np.asarray(responses, dtype=np.float64)
    if array.ndim != 2:
        raise ShapeError(f"responses must be 2-D, got shape {array.shape}")
    return array


def _like(template: Responses, data: np.ndarray) -> Responses:
    if isinstance(template, ResponseMatrix):
        return template.with_data(data)
    return data


def center_columns(responses: Responses) -> Responses:
    data = as_array(responses)
    return _like(responses, data - data.mean(axis=0, keepdims=True))


def pad_to_common_dim(first: Responses, second: Responses) -> Tuple[Responses, Responses]:
    """Right-pad the narrower matrix with zero columns."""
    a, b = as_array(first), as_array(second)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    width = max(a.shape[1], b.shape[1])
    a = np.pad(a, ((0, 0), (0, width - a.shape[1])))
    b = np.pad(b, ((0, 0), (0, width - b.shape[1])))
    return _like(first, a), _like(second, b)


def subsample_units(responses: Responses, n_units: int, seed: int) -> Responses:
    data = as_array(responses)
    if not 1 <= n_units <= data.shape[1]:
        raise ShapeError(f"cannot subsample {n_units} of {data.shape[1]} units")
    rng = np.random.default_rng(seed)
    columns = np.sort(rng.choice(data.shape[1], size=n_units, replace=False))
    return _like(responses, data[:, columns])


def rotate_units(responses: Responses, seed: int) -> Responses:
    data = as_array(responses)
    if data.shape[1] < 2:
        raise ShapeError("rotation needs at least two units")
    rotation = ortho_group.rvs(data.shape[1], random_state=np.random.default_rng(seed))
    return _like(responses, data @ rotation)


def permute_units(responses: Responses, seed: int) -> Responses:
    data = as_array(responses)
    order = np.random.default_rng(seed).permutation(data.shape[1])
    return _like(responses, data[:, order])
