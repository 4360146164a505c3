from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Union
import logging

import numpy as np

from ..util import ConfigurationError, DegenerateInputError, ShapeError
from .preprocess import as_array, center_columns, pad_to_common_dim
from .response import ResponseMatrix

ArrayLike = Union[np.ndarray, ResponseMatrix]


class Measure(str, Enum):
    PROCRUSTES = "procrustes"
    CKA = "cka"
    CCA = "cca"


class Convention(str, Enum):
    DISTANCE = "distance"
    SIMILARITY = "similarity"


@dataclass(frozen=True)
class SimilarityScore:
    measure: Measure
    value: float
    convention: Convention
    centered: bool = True
    padded_to: Optional[int] = None
    subsample_seed: Optional[int] = None

    def complement(self) -> "SimilarityScore":
        """1 − value with the other convention; Procrustes has no complement."""
        if self.measure == Measure.PROCRUSTES:
            raise ConfigurationError("the Procrustes angle has no similarity complement")
        flipped = (
            Convention.DISTANCE if self.convention == Convention.SIMILARITY else Convention.SIMILARITY
        )
        return replace(self, value=1.0 - self.value, convention=flipped)

    def as_row(self) -> dict:
        return {
            "measure": self.measure.value,
            "value": self.value,
            "convention": self.convention.value,
            "centered": self.centered,
            "padded_to": self.padded_to,
            "subsample_seed": self.subsample_seed,
        }


def _prepare(first: ArrayLike, second: ArrayLike, center: bool):
    a, b = as_array(first), as_array(second)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row counts differ: {a.shape[0]} vs {b.shape[0]}")
    if center:
        a, b = center_columns(a), center_columns(b)
    return a, b


def procrustes_distance(first: ArrayLike, second: ArrayLike, center: bool = True) -> float:
    """Angle arccos(‖H̃ᵀH‖_* / (‖H‖_F ‖H̃‖_F)) in [0, π/2] after optimal rotation.

    Evaluated as 2 arcsin(‖a − b Q‖ / 2) on unit-normalized matrices, which is
    the same angle and stays accurate near zero.
    """
    a, b = _prepare(first, second, center)
    a, b = pad_to_common_dim(a, b)
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise DegenerateInputError("Procrustes distance of a zero-norm response matrix")
    a, b = a / norm_a, b / norm_b
    u, _, vt = np.linalg.svd(b.T @ a)
    residual = np.linalg.norm(a - b @ (u @ vt))
    return float(2.0 * np.arcsin(np.clip(residual / 2.0, 0.0, 1.0)))


def cka_score(first: ArrayLike, second: ArrayLike) -> float:
    """Linear CKA of the column-centered matrices, in [0, 1]."""
    a, b = _prepare(first, second, center=True)
    cross = np.linalg.norm(b.T @ a) ** 2
    denominator = np.linalg.norm(a.T @ a) * np.linalg.norm(b.T @ b)
    if denominator == 0:
        raise DegenerateInputError("CKA of a constant response matrix")
    return float(np.clip(cross / denominator, 0.0, 1.0))


def _principal_basis(data: np.ndarray, rank: int) -> np.ndarray:
    u, s, _ = np.linalg.svd(data, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateInputError("CCA of a constant response matrix")
    tolerance = s[0] * max(data.shape) * np.finfo(np.float64).eps
    keep = min(rank, data.shape[0] // 5, data.shape[1], int((s > tolerance).sum()))
    if keep < 1:
        raise DegenerateInputError(f"CCA rank collapsed for a {data.shape} matrix")
    return u[:, :keep]


def cca_score(first: ArrayLike, second: ArrayLike, rank: int = 20) -> float:
    """Mean canonical correlation after PCA-reducing each side to at most
    ``min(rank, rows // 5, units)`` dimensions."""
    a, b = _prepare(first, second, center=True)
    basis_a, basis_b = _principal_basis(a, rank), _principal_basis(b, rank)
    correlations = np.linalg.svd(basis_a.T @ basis_b, compute_uv=False)
    return float(np.clip(correlations.mean(), 0.0, 1.0))


def score(
    measure: Union[Measure, str],
    first: ArrayLike,
    second: ArrayLike,
    center: bool = True,
    cca_rank: int = 20,
    subsample_seed: Optional[int] = None,
) -> SimilarityScore:
    measure = Measure(measure)
    padded_to = max(as_array(first).shape[1], as_array(second).shape[1])
    if measure == Measure.PROCRUSTES:
        value = procrustes_distance(first, second, center)
        return SimilarityScore(measure, value, Convention.DISTANCE, center, padded_to, subsample_seed)
    if measure == Measure.CKA:
        value = cka_score(first, second)
    else:
        value = cca_score(first, second, cca_rank)
    return SimilarityScore(measure, value, Convention.SIMILARITY, True, None, subsample_seed)


def compare_all(
    first: ArrayLike,
    second: ArrayLike,
    measures: Sequence[Union[Measure, str]] = tuple(Measure),
    center: bool = True,
    cca_rank: int = 20,
    subsample_seed: Optional[int] = None,
) -> List[SimilarityScore]:
    logger = logging.getLogger(__name__)
    scores = []
    for measure in measures:
        result = score(measure, first, second, center, cca_rank, subsample_seed)
        logger.debug(f"{result.measure.value}: {result.value:.6f} ({result.convention.value})")
        scores.append(result)
    return scores
