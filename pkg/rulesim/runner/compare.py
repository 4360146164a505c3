from typing import List, Optional, Sequence
import csv

from ..similarity import (
    Measure,
    ResponseMatrix,
    SimilarityScore,
    compare_all,
    permute_units,
    rotate_units,
    subsample_units,
)
from ..util import ConfigurationError, IngestionError
from .trace import format_value


def run_compare(
    path_a: str,
    path_b: str,
    measures: Sequence[str] = tuple(measure.value for measure in Measure),
    center: bool = True,
    subsample: Optional[int] = None,
    subsample_seed: int = 0,
    cca_rank: int = 20,
) -> List[SimilarityScore]:
    first, second = ResponseMatrix.read_csv(path_a), ResponseMatrix.read_csv(path_b)
    if first.data.shape[0] != second.data.shape[0]:
        raise IngestionError(
            f"{path_a} has {first.data.shape[0]} rows, {path_b} has {second.data.shape[0]}"
        )
    if subsample is not None:
        first = subsample_units(first, subsample, subsample_seed)
        second = subsample_units(second, subsample, subsample_seed + 1)
    return compare_all(
        first, second, measures, center, cca_rank, subsample_seed if subsample else None
    )


def write_scores(file_path: str, scores: List[SimilarityScore], complements: bool = True) -> None:
    """One row per score; CKA and CCA are followed by their distance complement."""
    columns = ["measure", "value", "convention", "centered", "padded_to", "subsample_seed"]
    with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.DictWriter(csvfile, columns, lineterminator="\n")
        writer.writeheader()
        for result in scores:
            rows = [result]
            if complements and result.measure != Measure.PROCRUSTES:
                rows.append(result.complement())
            for row in rows:
                writer.writerow({key: format_value(value) for key, value in row.as_row().items()})


def transform_file(path_in: str, path_out: str, kind: str, seed: int) -> ResponseMatrix:
    """Write a rotated or column-permuted copy of a response file."""
    responses = ResponseMatrix.read_csv(path_in)
    if kind == "rotate":
        transformed = rotate_units(responses, seed)
    elif kind == "permute":
        transformed = permute_units(responses, seed)
    else:
        raise ConfigurationError(f"unknown transform {kind!r}, choose rotate or permute")
    transformed.write_csv(path_out)
    return transformed
