from typing import Optional

import torch

from rulesim.network import Activation, NetworkConfig, NetworkParams, init_params
from rulesim.runner import ExperimentConfig, SimilarityConfig, TrainingConfig
from rulesim.task import ReachTask, TrialBatch
from rulesim.util import torch_generator


def network_config(
    n_neurons: int = 6,
    n_inputs: int = 3,
    n_outputs: int = 2,
    activation: str = "retanh",
    noise_std: float = 0.0,
    gain: float = 1.0,
    **kwargs,
) -> NetworkConfig:
    return NetworkConfig(
        n_neurons=n_neurons,
        n_inputs=n_inputs,
        n_outputs=n_outputs,
        dt=10.0,
        tau_m=50.0,
        activation=activation,
        noise_std=noise_std,
        gain=gain,
        **kwargs,
    )


def small_params(seed: int = 0, **kwargs) -> NetworkParams:
    return init_params(network_config(**kwargs), seed)


def regression_batch(
    n_trials: int = 3, n_steps: int = 7, n_inputs: int = 3, n_outputs: int = 2, seed: int = 0
) -> TrialBatch:
    generator = torch_generator(seed)
    inputs = torch.randn(n_trials, n_steps, n_inputs, generator=generator, dtype=torch.float64)
    targets = torch.randn(n_trials, n_steps, n_outputs, generator=generator, dtype=torch.float64)
    mask = torch.ones(n_trials, n_steps, dtype=torch.float64)
    mask[:, 0] = 0.0
    return TrialBatch(inputs, targets, mask, torch.arange(n_trials))


def classification_batch(
    n_trials: int = 3, n_steps: int = 7, n_inputs: int = 3, n_classes: int = 2, seed: int = 0
) -> TrialBatch:
    generator = torch_generator(seed)
    inputs = torch.randn(n_trials, n_steps, n_inputs, generator=generator, dtype=torch.float64)
    targets = torch.randint(n_classes, (n_trials,), generator=generator)
    mask = torch.zeros(n_trials, n_steps, dtype=torch.float64)
    mask[:, -3:] = 1.0
    return TrialBatch(inputs, targets, mask, torch.arange(n_trials))


def scalar_params(
    w_x: float = 1.0,
    w_h: float = 0.0,
    w_out: float = 1.0,
    beta: float = 0.5,
    activation: Activation = Activation.RELU,
    noise_std: float = 0.0,
) -> NetworkParams:
    return NetworkParams(
        w_x=torch.tensor([[w_x]], dtype=torch.float64),
        w_h=torch.tensor([[w_h]], dtype=torch.float64),
        w_out=torch.tensor([[w_out]], dtype=torch.float64),
        beta=beta,
        dt=(1 - beta) * 100.0,
        tau_m=100.0,
        activation=activation,
        noise_std=noise_std,
        gain=1.0,
    )


def tiny_reach_task(**kwargs) -> ReachTask:
    return ReachTask(dt=50.0, n_conditions=3, **kwargs)


def tiny_experiment(
    rule: str = "bptt",
    iterations: int = 4,
    eval_every: int = 2,
    seed: int = 0,
    reference: Optional[str] = None,
    **training,
) -> ExperimentConfig:
    task = tiny_reach_task()
    network = NetworkConfig(n_neurons=12, tau_m=100.0, noise_std=0.1)
    training_config = TrainingConfig(
        rule=rule,
        batch_size=4,
        iterations=iterations,
        eval_every=eval_every,
        seed=seed,
        es_samples=5,
        **training,
    )
    similarity = SimilarityConfig(reference=reference, eval_trials_per_condition=1)
    return ExperimentConfig(network, task, training_config, similarity)
