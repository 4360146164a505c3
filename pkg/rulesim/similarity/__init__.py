from .response import ResponseMatrix
from .preprocess import (
    center_columns,
    pad_to_common_dim,
    permute_units,
    rotate_units,
    subsample_units,
)
from .measures import (
    Convention,
    Measure,
    SimilarityScore,
    cca_score,
    cka_score,
    compare_all,
    procrustes_distance,
    score,
)
from .noisefloor import NoiseFloor, noise_floor
