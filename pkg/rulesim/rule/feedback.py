from math import sqrt

import torch

from ..network import NetworkConfig, NetworkParams, readout_feedback
from ..util import ShapeError, torch_generator


def init_feedback(config: NetworkConfig, seed: int) -> torch.Tensor:
    """Fixed random feedback B (N × N_out), drawn like w_out.T but not scaled by gain."""
    n, n_out = int(config.n_neurons), int(config.n_outputs)
    generator = torch_generator(seed)
    draw = torch.rand(n, n_out, generator=generator, dtype=config.torch_dtype)
    return (draw * 2 - 1) / sqrt(n)


def feedback_alignment_signal(
    params: NetworkParams, fixed_feedback: torch.Tensor, d_outputs: torch.Tensor
) -> torch.Tensor:
    """B dL/dŷ per step; the caller multiplies by f'(h)."""
    expected = (params.n_neurons, params.n_outputs)
    if tuple(fixed_feedback.shape) != expected:
        raise ShapeError(f"feedback matrix {tuple(fixed_feedback.shape)}, expected {expected}")
    return readout_feedback(d_outputs, fixed_feedback)
