from typing import Callable, Optional

import torch

from ..network import (
    LossKind,
    NetworkParams,
    StateTrajectory,
    activation_apply,
    loss_and_signal,
    rnn_forward,
    step_losses,
)
from ..task.batch import TrialBatch
from ..util import ConfigurationError, derive_seed, torch_generator
from .eprop import three_factor_gradient
from .rule import GradientSet, LearningRule, forward_and_signal, readout_gradient


def node_perturbation_signal(
    params: NetworkParams,
    trajectory: StateTrajectory,
    batch: TrialBatch,
    loss_kind: LossKind,
    sigma: float,
    generator: Optional[torch.Generator] = None,
    perturbation: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """Î_t = (L_t(h + ξ) − L_t(h)) ξ / σ², with ξ ~ N(0, σ²) per trial, step and unit."""
    hidden = trajectory.hidden
    if perturbation is None:
        perturbation = sigma * torch.randn(hidden.shape, generator=generator, dtype=hidden.dtype)
    baseline = step_losses(trajectory.outputs, batch, loss_kind)
    rates, _ = activation_apply(hidden + perturbation, params.activation)
    perturbed = step_losses(rates @ params.w_out.T, batch, loss_kind)
    return (perturbed - baseline)[..., None] * perturbation / sigma**2


def node_perturbation_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    sigma: float,
    loss_kind: LossKind = LossKind.MSE,
    perturbation: Optional[torch.Tensor] = None,
) -> GradientSet:
    if sigma <= 0:
        raise ConfigurationError(f"perturbation {sigma=} must be > 0")
    trajectory, _, d_outputs, _ = forward_and_signal(params, batch, noise_seed, loss_kind, None)
    generator = torch_generator(derive_seed(noise_seed, "node-perturbation"))
    signal = node_perturbation_signal(
        params, trajectory, batch.to(params.dtype), loss_kind, sigma, generator, perturbation
    )
    g_x, g_h = three_factor_gradient(params, trajectory, batch, signal)
    return GradientSet(g_x, g_h, readout_gradient(trajectory, d_outputs), "nodep")


def es_estimate(
    loss_fn: Callable[[torch.Tensor], torch.Tensor],
    theta: torch.Tensor,
    sigma: float,
    samples: int,
    generator: Optional[torch.Generator] = None,
    perturbation_mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """(1 / (σS)) Σ_s L(θ + σ ε_s) ε_s with ε_s ~ N(0, I)."""
    if sigma <= 0 or samples < 1:
        raise ConfigurationError(f"ES needs sigma > 0 and samples >= 1, got {sigma=} {samples=}")
    epsilon = torch.randn(samples, theta.numel(), generator=generator, dtype=theta.dtype)
    if perturbation_mask is not None:
        epsilon = epsilon * perturbation_mask
    losses = torch.stack(
        [torch.as_tensor(loss_fn(theta + sigma * epsilon[s]), dtype=theta.dtype) for s in range(samples)]
    )
    return (losses[:, None] * epsilon).sum(dim=0) / (sigma * samples)


def evolution_strategies_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    sigma: float,
    samples: int,
    loss_kind: LossKind = LossKind.MSE,
    noise_seed: int = 0,
    seed: Optional[int] = None,
) -> GradientSet:
    shapes = [tensor.shape for tensor in params.parameters()]
    sizes = [tensor.numel() for tensor in params.parameters()]
    theta = torch.cat([tensor.detach().flatten() for tensor in params.parameters()])
    batch = batch.to(params.dtype)

    mask = None
    if params.sparsity_mask is not None:
        mask = torch.ones_like(theta)
        start = sizes[0]
        mask[start : start + sizes[1]] = params.sparsity_mask.flatten()

    def loss_fn(flat: torch.Tensor) -> torch.Tensor:
        w_x, w_h, w_out = (
            chunk.reshape(shape) for chunk, shape in zip(torch.split(flat, sizes), shapes)
        )
        candidate = params.with_weights(w_x, w_h.clone(), w_out).project()
        trajectory = rnn_forward(candidate, batch, noise_seed)
        return loss_and_signal(candidate, trajectory, batch, loss_kind)[0]

    if seed is None:
        seed = derive_seed(noise_seed, "evolution-strategies")
    estimate = es_estimate(loss_fn, theta, sigma, samples, torch_generator(seed), mask)
    g_x, g_h, g_out = (
        chunk.reshape(shape) for chunk, shape in zip(torch.split(estimate, sizes), shapes)
    )
    return GradientSet(g_x, g_h, g_out, "es")


class NodePerturbation(LearningRule):
    tag = "nodep"

    def __init__(self, sigma: float = 0.01) -> None:
        self.sigma = sigma

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return node_perturbation_gradient(params, batch, noise_seed, self.sigma, loss_kind)


class EvolutionStrategies(LearningRule):
    tag = "es"

    def __init__(self, sigma: float = 0.01, samples: int = 50) -> None:
        self.sigma = sigma
        self.samples = samples

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return evolution_strategies_gradient(
            params, batch, self.sigma, self.samples, loss_kind, noise_seed
        )
