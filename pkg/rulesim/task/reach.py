from typing import Sequence, Tuple

import numpy as np

from ..util import ConfigurationError
from .batch import TrialBatch
from .task import TaskSpec, epoch_steps


class ReachTask(TaskSpec):
    """Condition-cued generation of synthetic EMG.

    Each condition has a fixed random code on ``n_code`` inputs and a hold cue
    that drops to 0 at movement onset. Every muscle target is a sum of
    ``n_bumps`` Gaussian bumps placed in the movement epoch, faded in by a
    smoothstep ramp so targets leave 0 continuously at onset. Codes and bumps
    are frozen by ``task_seed``.
    """

    kind = "reach-emg"
    loss_kind = "mse"
    default_neurons = 200
    default_iterations = 1000

    def __init__(
        self,
        dt: float = 10.0,
        hold_duration: float = 1450.0,
        movement_duration: float = 410.0,
        n_conditions: int = 27,
        n_code: int = 15,
        n_muscles: int = 7,
        n_bumps: int = 3,
        bump_width: Tuple[float, float] = (20.0, 50.0),
        code_off_at_onset: bool = False,
        task_seed: int = 0,
    ) -> None:
        self.dt = dt
        self.hold_duration = hold_duration
        self.movement_duration = movement_duration
        self._n_conditions = n_conditions
        self.n_code = n_code
        self.n_muscles = n_muscles
        self.n_bumps = n_bumps
        self.bump_width = tuple(bump_width)
        self.code_off_at_onset = code_off_at_onset
        self.task_seed = task_seed

        self.onset = epoch_steps(hold_duration, dt)
        self._n_steps = self.onset + epoch_steps(movement_duration, dt)
        if self.onset < 1 or self._n_steps <= self.onset:
            raise ConfigurationError(f"hold and movement epochs need steps at {dt=}")
        if min(n_conditions, n_code, n_muscles, n_bumps) < 1:
            raise ConfigurationError("conditions, code, muscles and bumps must be positive")
        self.codes, self.emg = self._draw_conditions()

    @property
    def n_conditions(self) -> int:
        return self._n_conditions

    @property
    def n_steps(self) -> int:
        return self._n_steps

    @property
    def n_inputs(self) -> int:
        return self.n_code + 1

    @property
    def n_outputs(self) -> int:
        return self.n_muscles

    def _draw_conditions(self) -> Tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(self.task_seed)
        codes = rng.choice([-1.0, 1.0], size=(self.n_conditions, self.n_code)) / np.sqrt(self.n_code)

        times = np.arange(self.n_steps) * self.dt
        onset_time, end_time = self.onset * self.dt, (self.n_steps - 1) * self.dt
        shape = (self.n_conditions, self.n_muscles, self.n_bumps)
        amplitudes = rng.uniform(0.0, 1.0, size=shape)
        widths = rng.uniform(*self.bump_width, size=shape)
        low = np.minimum(onset_time + 4 * widths, end_time)
        centers = low + rng.uniform(0.0, 1.0, size=shape) * (end_time - low)

        bumps = amplitudes[..., None] * np.exp(
            -((times - centers[..., None]) ** 2) / (2 * widths[..., None] ** 2)
        )
        ramp = np.clip((times - onset_time) / self.bump_width[1], 0.0, 1.0)
        ramp = 3 * ramp**2 - 2 * ramp**3
        emg = (bumps.sum(axis=2) * ramp).transpose(0, 2, 1)
        emg[:, : self.onset] = 0.0
        return codes, emg

    def condition_trials(self, condition_ids: Sequence[int], seed: int) -> TrialBatch:
        condition_ids = np.asarray(condition_ids, dtype=np.int64)
        if np.any((condition_ids < 0) | (condition_ids >= self.n_conditions)):
            raise ConfigurationError(f"condition ids must lie in [0, {self.n_conditions})")
        n_trials = condition_ids.shape[0]
        inputs = np.zeros((n_trials, self.n_steps, self.n_inputs))
        code_stop = self.onset if self.code_off_at_onset else self.n_steps
        inputs[:, :code_stop, : self.n_code] = self.codes[condition_ids][:, None, :]
        inputs[:, : self.onset, self.n_code] = 1.0
        targets = self.emg[condition_ids]
        loss_mask = np.ones((n_trials, self.n_steps))
        return self._to_batch(inputs, targets, loss_mask, condition_ids)


def gen_reach_task(task: ReachTask, batch_size: int, seed: int) -> TrialBatch:
    return task.generate(batch_size, seed)
