import numpy as np
import pytest
import torch

from rulesim.similarity import ResponseMatrix, procrustes_distance
from rulesim.task import (
    ContextIntegrationTask,
    ReachTask,
    TrialBatch,
    epoch_steps,
    make_task,
    trial_average,
)
from rulesim.task.context import COLOR, CONTEXT_COLOR, CONTEXT_MOTION, FIXATION, MOTION
from rulesim.util import ConfigurationError, DegenerateInputError


class TestEpochs:
    def test_round_half_up(self):
        assert epoch_steps(350.0, 50.0) == 7
        assert epoch_steps(410.0, 50.0) == 8
        assert epoch_steps(25.0, 50.0) == 1


class TestContextIntegration:
    def test_default_layout(self):
        task = ContextIntegrationTask()
        assert task.epoch_lengths == [7, 15, 6, 6]
        assert task.n_steps == 34
        assert task.n_conditions == 72
        assert task.response_window == (7, 22)

    def test_finer_steps_keep_epoch_durations(self):
        task = ContextIntegrationTask(dt=25.0)
        assert task.epoch_lengths == [14, 30, 12, 12]
        assert sum(task.epoch_lengths) == task.n_steps

    def test_batch_shapes(self):
        batch = ContextIntegrationTask().generate(16, seed=0)
        assert batch.inputs.shape == (16, 34, 5)
        assert batch.targets.shape == (16,)
        assert batch.is_classification
        assert torch.all(batch.loss_mask[:, :28] == 0)
        assert torch.all(batch.loss_mask[:, 28:] == 1)

    def test_evidence_only_during_stimulus(self):
        task = ContextIntegrationTask()
        inputs = task.generate(32, seed=1).inputs
        assert torch.count_nonzero(inputs[:, :7, MOTION:COLOR + 1]) == 0
        assert torch.count_nonzero(inputs[:, 22:, MOTION:COLOR + 1]) == 0
        assert inputs[:, 7:22, MOTION].std() > 0.05

    def test_cues(self):
        task = ContextIntegrationTask()
        batch = task.condition_trials([0, 36], seed=0)
        assert torch.all(batch.inputs[:, :28, FIXATION] == 1)
        assert torch.all(batch.inputs[:, 28:, FIXATION] == 0)
        assert batch.inputs[0, :, CONTEXT_MOTION].min() == 1
        assert batch.inputs[1, :, CONTEXT_COLOR].min() == 1
        assert batch.inputs[0, :, CONTEXT_COLOR].max() == 0

    def test_noiseless_relevant_sign_decides(self):
        task = ContextIntegrationTask(sensory_noise=0.0)
        n_levels = len(task.coherences)
        ids = np.arange(task.n_conditions)
        context, motion_bin, color_bin = task.decode_condition(ids)
        batch = task.condition_trials(ids, seed=0)
        levels = np.asarray(task.coherences)
        relevant = np.where(context == 0, levels[motion_bin], levels[color_bin])
        assert batch.targets.tolist() == (relevant > 0).astype(int).tolist()
        assert n_levels**2 * 2 == ids.size

    def test_irrelevant_stream_does_not_change_the_class(self):
        task = ContextIntegrationTask()
        n_levels = len(task.coherences)
        for motion_bin in range(n_levels):
            for color_bin in range(n_levels):
                flipped = n_levels - 1 - color_bin
                ids = [motion_bin * n_levels + color_bin, motion_bin * n_levels + flipped]
                targets = task.condition_trials(ids, seed=0).targets
                assert targets[0] == targets[1]

    def test_classes_are_balanced(self):
        targets = ContextIntegrationTask().generate(10_000, seed=2).targets.double()
        assert abs(targets.mean().item() - 0.5) < 0.03

    def test_generation_is_pure(self):
        task = ContextIntegrationTask()
        first, second = task.generate(8, seed=9), task.generate(8, seed=9)
        for a, b in zip(first, second):
            assert torch.equal(a, b)

    def test_invalid_settings(self):
        with pytest.raises(ConfigurationError):
            ContextIntegrationTask(coherences=(0.0, 0.1))
        with pytest.raises(ConfigurationError):
            ContextIntegrationTask().condition_trials([72], seed=0)
        with pytest.raises(ConfigurationError):
            ContextIntegrationTask().generate(0, seed=0)


class TestReach:
    def test_batch_layout(self):
        task = ReachTask()
        batch = task.generate(8, seed=0)
        assert task.onset == 145
        assert batch.inputs.shape == (8, 186, 16)
        assert batch.targets.shape == (8, 186, 7)
        assert torch.all(batch.loss_mask == 1)

    def test_targets_are_bounded_bumps(self):
        task = ReachTask()
        assert task.emg.min() >= 0.0
        assert task.emg.max() <= 3.0
        assert np.all(task.emg[:, : task.onset] == 0)
        assert np.all(task.emg[:, task.onset :].max(axis=1) > 0)

    def test_targets_leave_zero_smoothly_at_onset(self):
        task = ReachTask()
        onset = task.onset
        assert np.abs(task.emg[:, onset] - task.emg[:, onset - 1]).max() < 1e-6
        assert np.abs(task.emg[:, onset + 1] - task.emg[:, onset]).max() < 1e-2

    def test_hold_cue_drops_at_onset(self):
        task = ReachTask()
        batch = task.condition_trials([3], seed=0)
        hold = batch.inputs[0, :, task.n_code]
        assert torch.all(hold[: task.onset] == 1)
        assert torch.all(hold[task.onset :] == 0)

    def test_code_switch_off(self):
        task = ReachTask(code_off_at_onset=True)
        inputs = task.condition_trials([0], seed=0).inputs
        assert torch.count_nonzero(inputs[0, task.onset :, : task.n_code]) == 0
        assert torch.count_nonzero(inputs[0, : task.onset, : task.n_code]) > 0

    def test_same_condition_same_trial(self):
        task = ReachTask()
        batch = task.condition_trials([5, 5], seed=0)
        assert torch.equal(batch.inputs[0], batch.inputs[1])
        assert torch.equal(batch.targets[0], batch.targets[1])

    def test_task_seed_freezes_conditions(self):
        np.testing.assert_array_equal(ReachTask().emg, ReachTask().emg)
        assert not np.array_equal(ReachTask().codes, ReachTask(task_seed=1).codes)

    def test_config_round_trip(self):
        task = ReachTask(dt=50.0, n_conditions=3)
        rebuilt = make_task(task.get_config_dict())
        assert isinstance(rebuilt, ReachTask)
        assert rebuilt.n_conditions == 3
        np.testing.assert_array_equal(rebuilt.emg, task.emg)

    def test_unknown_kind(self):
        with pytest.raises(ConfigurationError):
            make_task({"kind": "maze"})


class TestTrialAverage:
    def test_single_trial_is_identity(self):
        trials = np.arange(12, dtype=np.float64).reshape(1, 4, 3)
        averaged = trial_average(trials, [0])
        np.testing.assert_array_equal(averaged.to_array(), trials)

    def test_means_are_stacked_in_condition_order(self):
        trials = np.stack([np.full((2, 1), value) for value in [5.0, 1.0, 3.0, 7.0]])
        averaged = trial_average(trials, [1, 0, 0, 1])
        np.testing.assert_allclose(averaged.data.flatten(), [2.0, 2.0, 6.0, 6.0])

    def test_opposite_trials_cancel(self):
        trial = np.random.default_rng(0).standard_normal((3, 2))
        averaged = trial_average(np.stack([trial, -trial]), [0, 0])
        np.testing.assert_allclose(averaged.data, 0.0)

    def test_no_trials(self):
        with pytest.raises(DegenerateInputError):
            trial_average(np.zeros((0, 3, 2)), [])

    def test_batch_validation(self):
        batch = ReachTask(dt=50.0, n_conditions=2).generate(4, seed=0)
        assert isinstance(batch.validate(), TrialBatch)
        empty = batch._replace(loss_mask=torch.zeros_like(batch.loss_mask))
        with pytest.raises(DegenerateInputError):
            empty.validate()

    def test_more_trials_approach_the_template(self):
        rng = np.random.default_rng(0)
        template = rng.standard_normal((4, 10, 20))
        distances = []
        for count in [1, 5, 10, 20]:
            repeats = []
            for _ in range(10):
                noise = rng.standard_normal((4 * count, 10, 20))
                trials = np.repeat(template, count, axis=0) + noise
                averaged = trial_average(trials, np.repeat(np.arange(4), count))
                repeats.append(procrustes_distance(averaged, ResponseMatrix.from_array(template)))
            distances.append(np.mean(repeats))
        assert np.all(np.diff(distances) < 0)
