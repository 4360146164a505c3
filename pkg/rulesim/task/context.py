from typing import Sequence, Tuple

import numpy as np

from ..util import ConfigurationError
from .batch import TrialBatch
from .task import TaskSpec, epoch_steps

FIXATION, MOTION, COLOR, CONTEXT_MOTION, CONTEXT_COLOR = range(5)


class ContextIntegrationTask(TaskSpec):
    """Context-dependent integration of two noisy evidence streams.

    Epochs are fixation, stimulus, delay and decision. The context cue says
    which stream decides the class (1 if its coherence is positive). The
    condition id is ``context * L² + motion_bin * L + color_bin`` for L
    coherence levels.
    """

    kind = "context-integration"
    loss_kind = "cross-entropy"
    default_neurons = 400
    default_iterations = 3000

    def __init__(
        self,
        dt: float = 50.0,
        fixation_duration: float = 350.0,
        stimulus_duration: float = 750.0,
        delay_duration: float = 300.0,
        decision_duration: float = 300.0,
        coherences: Tuple[float, ...] = (-0.16, -0.08, -0.04, 0.04, 0.08, 0.16),
        sensory_noise: float = 0.1,
    ) -> None:
        self.dt = dt
        self.fixation_duration = fixation_duration
        self.stimulus_duration = stimulus_duration
        self.delay_duration = delay_duration
        self.decision_duration = decision_duration
        self.coherences = tuple(float(c) for c in coherences)
        self.sensory_noise = sensory_noise
        if dt <= 0:
            raise ConfigurationError(f"{dt=} must be > 0")
        if not self.coherences or 0.0 in self.coherences:
            raise ConfigurationError(f"coherence levels must be nonzero, got {coherences}")

        steps = [
            epoch_steps(duration, dt)
            for duration in (fixation_duration, stimulus_duration, delay_duration, decision_duration)
        ]
        if min(steps) < 1:
            raise ConfigurationError(f"every epoch needs at least one step at {dt=}, got {steps}")
        self.epoch_lengths = steps
        self.stimulus_start = steps[0]
        self.stimulus_stop = steps[0] + steps[1]
        self.decision_start = steps[0] + steps[1] + steps[2]
        self._n_steps = sum(steps)

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def n_inputs(self) -> int:
        return 5

    @property
    def n_outputs(self) -> int:
        return 2

    @property
    def n_conditions(self) -> int:
        return 2 * len(self.coherences) ** 2

    @property
    def response_window(self) -> Tuple[int, int]:
        return self.stimulus_start, self.stimulus_stop

    def decode_condition(self, condition_ids: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        n_levels = len(self.coherences)
        condition_ids = np.asarray(condition_ids)
        context = condition_ids // n_levels**2
        motion_bin = (condition_ids // n_levels) % n_levels
        color_bin = condition_ids % n_levels
        return context, motion_bin, color_bin

    def condition_trials(self, condition_ids: Sequence[int], seed: int) -> TrialBatch:
        condition_ids = np.asarray(condition_ids, dtype=np.int64)
        if np.any((condition_ids < 0) | (condition_ids >= self.n_conditions)):
            raise ConfigurationError(f"condition ids must lie in [0, {self.n_conditions})")
        rng = np.random.default_rng(seed)
        levels = np.asarray(self.coherences)
        context, motion_bin, color_bin = self.decode_condition(condition_ids)
        motion, color = levels[motion_bin], levels[color_bin]
        n_trials = condition_ids.shape[0]
        stimulus = slice(self.stimulus_start, self.stimulus_stop)
        n_stimulus = self.stimulus_stop - self.stimulus_start

        inputs = np.zeros((n_trials, self.n_steps, self.n_inputs))
        inputs[:, : self.decision_start, FIXATION] = 1.0
        noise = rng.standard_normal((n_trials, n_stimulus, 2)) * self.sensory_noise
        inputs[:, stimulus, MOTION] = motion[:, None] + noise[..., 0]
        inputs[:, stimulus, COLOR] = color[:, None] + noise[..., 1]
        inputs[:, :, CONTEXT_MOTION] = (context == 0)[:, None]
        inputs[:, :, CONTEXT_COLOR] = (context == 1)[:, None]

        relevant = np.where(context == 0, motion, color)
        targets = (relevant > 0).astype(np.int64)
        loss_mask = np.zeros((n_trials, self.n_steps))
        loss_mask[:, self.decision_start :] = 1.0
        return self._to_batch(inputs, targets, loss_mask, condition_ids)


def gen_context_task(task: ContextIntegrationTask, batch_size: int, seed: int) -> TrialBatch:
    return task.generate(batch_size, seed)
