from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..similarity import ResponseMatrix, procrustes_distance
from ..task import trial_average
from ..util import ConfigurationError
from .config import ExperimentConfig
from .runner import Runner


def make_surrogate_reference(
    config: ExperimentConfig, seed: int, iterations: Optional[int] = None
) -> ResponseMatrix:
    """Condition-averaged responses of a held-out BPTT network trained on the task."""
    training = {"rule": "bptt", "seed": seed, "feedback": "exact"}
    if iterations is not None:
        training["iterations"] = iterations
    held_out = config.with_overrides(training=training, similarity={"reference": None})
    runner = Runner(held_out)
    runner.run()
    responses = runner.responses()
    responses.source = "surrogate"
    logger = logging.getLogger(__name__)
    logger.info(
        f"surrogate reference: {responses.n_conditions} conditions x {responses.n_steps} steps "
        f"x {responses.n_units} units, final accuracy {runner.trace.rows[-1].normalized_accuracy:.3f}"
    )
    return responses


def noisy_trials(
    template: ResponseMatrix, n_trials: int, noise_std: float, seed: int
) -> Tuple[np.ndarray, np.ndarray]:
    """``n_trials`` noisy single-trial copies per condition of the template."""
    if n_trials < 1:
        raise ConfigurationError(f"{n_trials=} must be >= 1")
    rng = np.random.default_rng(seed)
    mean = template.to_array()
    trials = np.repeat(mean, n_trials, axis=0)
    trials = trials + noise_std * rng.standard_normal(trials.shape)
    condition_ids = np.repeat(np.arange(template.n_conditions), n_trials)
    return trials, condition_ids


def trial_averaging_curve(
    template: ResponseMatrix,
    counts: Sequence[int] = (1, 5, 10, 20),
    noise_std: float = 1.0,
    seed: int = 0,
    repeats: int = 10,
) -> List[Tuple[int, float]]:
    """Mean distance between two independent k-trial averages, for every k."""
    rng = np.random.default_rng(seed)
    curve = []
    for count in counts:
        distances = []
        for _ in range(repeats):
            seeds = rng.integers(2**62, size=2)
            first = trial_average(*noisy_trials(template, count, noise_std, int(seeds[0])))
            second = trial_average(*noisy_trials(template, count, noise_std, int(seeds[1])))
            distances.append(procrustes_distance(first, second))
        curve.append((count, float(np.mean(distances))))
    return curve
