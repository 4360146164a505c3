import numpy as np
import pytest
import torch

from rulesim.network import (
    Activation,
    LossKind,
    NetworkConfig,
    NetworkParams,
    StateTrajectory,
    activation_apply,
    init_params,
    loss_and_signal,
    normalized_accuracy,
    rnn_forward,
    step_losses,
    weight_eigenspectrum,
)
from rulesim.task import TrialBatch
from rulesim.util import ConfigurationError, DegenerateInputError, ShapeError

from .factories import network_config, regression_batch, scalar_params, small_params


def _trajectory(outputs: torch.Tensor) -> StateTrajectory:
    zeros = torch.zeros_like(outputs)
    return StateTrajectory(zeros, zeros, outputs, 0)


class TestInitialization:
    def test_zero_gain_gives_zero_recurrence(self):
        params = init_params(network_config(n_neurons=20, gain=0.0), seed=3)
        assert torch.count_nonzero(params.w_h) == 0
        assert torch.count_nonzero(params.w_out) == 0

    @pytest.mark.parametrize("gain", [1.0, 1.5])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_recurrent_variance_matches_gain(self, gain, seed):
        n = 200
        params = init_params(network_config(n_neurons=n, gain=gain), seed)
        variance = params.w_h.var().item() * n
        assert variance == pytest.approx(gain**2, rel=0.1)

    @pytest.mark.parametrize("gain", [1.0, 1.5])
    def test_spectral_radius_follows_the_circular_law(self, gain):
        radii = [
            np.abs(weight_eigenspectrum(init_params(network_config(n_neurons=200, gain=gain), seed))).max()
            for seed in range(10)
        ]
        assert abs(np.mean(radii) / gain - 1.0) < 0.15

    def test_input_and_readout_ranges(self):
        config = network_config(n_neurons=50, n_inputs=4, gain=1.5)
        params = init_params(config, seed=0)
        assert params.w_x.abs().max() <= 1 / np.sqrt(4)
        assert params.w_out.abs().max() <= 1.5 / np.sqrt(50)

    def test_readout_unscaled_when_requested(self):
        config = network_config(n_neurons=50, gain=0.0, scale_readout_by_gain=False)
        params = init_params(config, seed=0)
        assert torch.count_nonzero(params.w_out) > 0

    def test_same_seed_same_weights(self):
        first, second = small_params(seed=5), small_params(seed=5)
        for a, b in zip(first.parameters(), second.parameters()):
            torch.testing.assert_close(a, b, rtol=0, atol=0)

    def test_leak_factor(self):
        assert network_config().beta == pytest.approx(0.8)

    @pytest.mark.parametrize("dt", [50.0, 80.0])
    def test_step_not_below_time_constant_is_rejected(self, dt):
        config = NetworkConfig(n_neurons=4, n_inputs=1, n_outputs=1, dt=dt, tau_m=50.0)
        with pytest.raises(ConfigurationError):
            init_params(config, seed=0)

    def test_unknown_activation_is_rejected(self):
        with pytest.raises(ConfigurationError):
            network_config(activation="sigmoid").validate()

    def test_task_step_conflict_is_rejected(self):
        config = NetworkConfig(dt=20.0)
        with pytest.raises(ConfigurationError):
            config.with_task_defaults(n_inputs=2, n_outputs=1, n_neurons=8, dt=10.0)

    def test_task_defaults_fill_missing_sizes(self):
        config = NetworkConfig(n_neurons=16).with_task_defaults(3, 2, 200, 10.0)
        assert (config.n_neurons, config.n_inputs, config.n_outputs, config.dt) == (16, 3, 2, 10.0)


class TestMasks:
    def test_dale_signs_per_presynaptic_column(self):
        params = small_params(n_neurons=10, excitatory_fraction=0.8, seed=1)
        assert torch.all(params.w_h[:, :8] >= 0)
        assert torch.all(params.w_h[:, 8:] <= 0)
        assert params.cell_types().tolist() == [0] * 8 + [1] * 2

    def test_dale_initialization_is_balanced(self):
        params = small_params(n_neurons=200, excitatory_fraction=0.8, seed=3)
        excitatory = params.w_h[:, :160].sum().item()
        inhibitory = -params.w_h[:, 160:].sum().item()
        assert abs(excitatory / inhibitory - 1.0) < 0.1
        assert np.abs(weight_eigenspectrum(params)).max() < 1.0

    def test_sparsity_mask_zeroes_entries(self):
        params = small_params(n_neurons=30, connection_density=0.3, seed=2)
        assert torch.all(params.w_h[params.sparsity_mask == 0] == 0)
        density = params.sparsity_mask.mean().item()
        assert 0.15 < density < 0.45

    def test_projection_is_idempotent(self):
        params = small_params(n_neurons=12, excitatory_fraction=0.75, connection_density=0.5)
        params.w_h.add_(torch.randn(12, 12, dtype=torch.float64))
        once = params.project().w_h.clone()
        twice = params.project().w_h
        torch.testing.assert_close(once, twice, rtol=0, atol=0)
        assert torch.all(once[:, :9] >= 0)
        assert torch.all(once[params.sparsity_mask == 0] == 0)


class TestActivation:
    def test_retanh_value_and_derivative(self):
        value, derivative = activation_apply(torch.tensor([0.5, -1.0, 0.0]), Activation.RETANH)
        torch.testing.assert_close(value, torch.tensor([0.46211716, 0.0, 0.0]))
        torch.testing.assert_close(derivative, torch.tensor([0.78644773, 0.0, 0.0]))

    def test_relu_derivative_is_zero_at_origin(self):
        value, derivative = activation_apply(torch.tensor([2.0, -2.0, 0.0]), Activation.RELU)
        assert value.tolist() == [2.0, 0.0, 0.0]
        assert derivative.tolist() == [1.0, 0.0, 0.0]


class TestForward:
    def test_scalar_recursion(self):
        params = scalar_params(w_x=1.0, w_h=0.0, beta=0.5)
        batch = TrialBatch(
            torch.ones(1, 2, 1, dtype=torch.float64),
            torch.zeros(1, 2, 1, dtype=torch.float64),
            torch.ones(1, 2, dtype=torch.float64),
            torch.zeros(1, dtype=torch.long),
        )
        trajectory = rnn_forward(params, batch, noise_seed=0)
        torch.testing.assert_close(
            trajectory.hidden.flatten(), torch.tensor([0.5, 0.75], dtype=torch.float64)
        )

    def test_zero_weights_give_zero_states(self):
        params = small_params()
        params = params.with_weights(
            torch.zeros_like(params.w_x), torch.zeros_like(params.w_h), params.w_out
        )
        trajectory = rnn_forward(params, regression_batch(), noise_seed=0)
        assert torch.count_nonzero(trajectory.hidden) == 0
        assert torch.count_nonzero(trajectory.outputs) == 0

    def test_presynaptic_rates_are_shifted(self):
        trajectory = rnn_forward(small_params(), regression_batch(), noise_seed=0)
        presynaptic = trajectory.presynaptic_rates()
        assert torch.count_nonzero(presynaptic[:, 0]) == 0
        torch.testing.assert_close(presynaptic[:, 1:], trajectory.rates[:, :-1])

    def test_noise_is_reproducible(self):
        params = small_params(noise_std=0.1)
        batch = regression_batch()
        first = rnn_forward(params, batch, noise_seed=11)
        second = rnn_forward(params, batch, noise_seed=11)
        other = rnn_forward(params, batch, noise_seed=12)
        torch.testing.assert_close(first.hidden, second.hidden, rtol=0, atol=0)
        assert not torch.allclose(first.hidden, other.hidden)

    def test_input_width_mismatch(self):
        with pytest.raises(ShapeError):
            rnn_forward(small_params(n_inputs=3), regression_batch(n_inputs=4), noise_seed=0)

    def test_eigenspectrum_has_one_value_per_unit(self):
        eigenvalues = weight_eigenspectrum(small_params(n_neurons=9))
        assert eigenvalues.shape == (9,)
        assert np.iscomplexobj(eigenvalues)

    def test_save_and_load(self, tmp_path):
        params = small_params(n_neurons=8, excitatory_fraction=0.5)
        file_path = str(tmp_path / "params.pt")
        params.save(file_path)
        loaded = NetworkParams.load(file_path)
        for a, b in zip(params.parameters(), loaded.parameters()):
            torch.testing.assert_close(a, b, rtol=0, atol=0)
        torch.testing.assert_close(loaded.dale_mask, params.dale_mask)
        assert loaded.activation == params.activation
        assert loaded.beta == params.beta


class TestLoss:
    def test_single_output_example(self):
        params = scalar_params(w_x=2.0, beta=0.5)
        batch = TrialBatch(
            torch.ones(1, 1, 1, dtype=torch.float64),
            torch.zeros(1, 1, 1, dtype=torch.float64),
            torch.ones(1, 1, dtype=torch.float64),
            torch.zeros(1, dtype=torch.long),
        )
        trajectory = rnn_forward(params, batch, noise_seed=0)
        loss, d_outputs, signal = loss_and_signal(params, trajectory, batch, LossKind.MSE)
        assert loss.item() == pytest.approx(0.5)
        assert d_outputs.item() == pytest.approx(1.0)
        assert signal.item() == pytest.approx(1.0)

    def test_all_zero_mask_is_degenerate(self):
        batch = regression_batch()
        batch = batch._replace(loss_mask=torch.zeros_like(batch.loss_mask))
        trajectory = rnn_forward(small_params(), batch, noise_seed=0)
        with pytest.raises(DegenerateInputError):
            step_losses(trajectory.outputs, batch, LossKind.MSE)

    def test_masked_steps_do_not_contribute(self):
        batch = regression_batch()
        trajectory = rnn_forward(small_params(), batch, noise_seed=0)
        losses = step_losses(trajectory.outputs, batch, LossKind.MSE)
        assert torch.count_nonzero(losses[:, 0]) == 0

    @pytest.mark.parametrize("kind", [LossKind.MSE, LossKind.CROSS_ENTROPY])
    def test_signal_is_the_direct_state_derivative(self, kind):
        n_outputs = 2
        batch = regression_batch(n_outputs=n_outputs)
        if kind == LossKind.CROSS_ENTROPY:
            mask = torch.zeros_like(batch.loss_mask)
            mask[:, -2:] = 1.0
            batch = TrialBatch(batch.inputs, torch.tensor([0, 1, 1]), mask, batch.condition_ids)
        params = small_params(n_outputs=n_outputs, noise_std=0.05)
        trajectory = rnn_forward(params, batch, noise_seed=4)
        _, _, signal = loss_and_signal(params, trajectory, batch, kind)

        hidden = trajectory.hidden.clone().requires_grad_(True)
        rates, _ = activation_apply(hidden, params.activation)
        total = step_losses(rates @ params.w_out.T, batch, kind).sum()
        (expected,) = torch.autograd.grad(total, hidden)
        torch.testing.assert_close(signal, expected, rtol=1e-10, atol=1e-12)

    def test_fixed_feedback_equal_to_readout_gives_exact_signal(self):
        params = small_params()
        batch = regression_batch()
        trajectory = rnn_forward(params, batch, noise_seed=0)
        _, _, exact = loss_and_signal(params, trajectory, batch, LossKind.MSE)
        _, _, fed_back = loss_and_signal(
            params, trajectory, batch, LossKind.MSE, feedback=params.w_out.T.clone()
        )
        torch.testing.assert_close(exact, fed_back)


class TestNormalizedAccuracy:
    def _batch(self, targets: torch.Tensor) -> TrialBatch:
        n_trials, n_steps, _ = targets.shape
        return TrialBatch(
            torch.zeros(n_trials, n_steps, 1, dtype=torch.float64),
            targets,
            torch.ones(n_trials, n_steps, dtype=torch.float64),
            torch.arange(n_trials),
        )

    def test_perfect_regression(self):
        targets = torch.randn(2, 5, 3, dtype=torch.float64)
        accuracy = normalized_accuracy(_trajectory(targets.clone()), self._batch(targets), "mse")
        assert accuracy == pytest.approx(1.0)

    def test_mean_prediction_scores_zero(self):
        targets = torch.randn(2, 5, 3, dtype=torch.float64)
        outputs = torch.full_like(targets, targets.mean().item())
        assert normalized_accuracy(_trajectory(outputs), self._batch(targets), "mse") == pytest.approx(
            0.0, abs=1e-12
        )

    def test_poor_prediction_is_clamped(self):
        targets = torch.randn(2, 5, 3, dtype=torch.float64)
        assert normalized_accuracy(_trajectory(targets + 10.0), self._batch(targets), "mse") == 0.0

    def test_constant_targets_are_degenerate(self):
        targets = torch.ones(2, 5, 3, dtype=torch.float64)
        with pytest.raises(DegenerateInputError):
            normalized_accuracy(_trajectory(targets), self._batch(targets), "mse")

    def test_confident_classifier(self):
        outputs = torch.zeros(2, 4, 2, dtype=torch.float64)
        outputs[0, :, 0] = 30.0
        outputs[1, :, 1] = 30.0
        batch = TrialBatch(
            torch.zeros(2, 4, 1, dtype=torch.float64),
            torch.tensor([0, 1]),
            torch.ones(2, 4, dtype=torch.float64),
            torch.arange(2),
        )
        accuracy = normalized_accuracy(_trajectory(outputs), batch, "cross-entropy")
        assert accuracy == pytest.approx(1.0, abs=1e-10)
