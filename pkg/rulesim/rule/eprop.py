from typing import List, Optional, Tuple

import torch
import torch.nn.functional as F

from ..network import Activation, LossKind, NetworkParams, StateTrajectory
from ..task.batch import TrialBatch
from ..util import ConfigurationError, RuleSimObject, UnsupportedConfigurationError
from .rule import (
    GradientSet,
    LearningRule,
    forward_and_signal,
    mask_recurrent,
    readout_gradient,
)


class EligibilityState:
    """Per-synapse traces e_ij over the presynaptic vector [f(h_{t-1}), x_t].

    Updated online as e_t = d_t ⊙ e_{t-1} + (1 − β) pre_t, where d_t is the
    diagonal of the postsynaptic Jacobian.
    """

    def __init__(
        self,
        batch_size: int,
        n_neurons: int,
        n_presynaptic: int,
        dtype: torch.dtype = torch.float64,
    ) -> None:
        self.trace = torch.zeros(batch_size, n_neurons, n_presynaptic, dtype=dtype)
        self.step = 0

    def update(self, diagonal: torch.Tensor, presynaptic: torch.Tensor, scale: float) -> torch.Tensor:
        self.trace = diagonal[:, :, None] * self.trace + scale * presynaptic[:, None, :]
        self.step += 1
        return self.trace


def three_factor_gradient(
    params: NetworkParams,
    trajectory: StateTrajectory,
    batch: TrialBatch,
    signal: torch.Tensor,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Accumulate Σ_t I_t e_t for input and recurrent weights in one forward sweep."""
    inputs = batch.inputs.to(params.dtype)
    n_trials, n_steps, _ = inputs.shape
    n = params.n_neurons
    beta = params.beta
    derivatives = trajectory.derivatives()
    presynaptic = torch.cat([trajectory.presynaptic_rates(), inputs], dim=-1)
    self_coupling = torch.diagonal(params.w_h)

    state = EligibilityState(n_trials, n, presynaptic.shape[-1], params.dtype)
    accumulated = torch.zeros(n, presynaptic.shape[-1], dtype=params.dtype)
    previous = torch.zeros(n_trials, n, dtype=params.dtype)
    for t in range(n_steps):
        diagonal = beta + (1 - beta) * self_coupling * previous
        trace = state.update(diagonal, presynaptic[:, t], 1 - beta)
        accumulated += torch.einsum("bn,bnm->nm", signal[:, t], trace)
        previous = derivatives[:, t]

    g_h = mask_recurrent(params, accumulated[:, :n])
    g_x = accumulated[:, n:]
    return g_x, g_h


def eprop_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    loss_kind: LossKind = LossKind.MSE,
    feedback: Optional[torch.Tensor] = None,
) -> GradientSet:
    trajectory, _, d_outputs, signal = forward_and_signal(
        params, batch, noise_seed, loss_kind, feedback
    )
    g_x, g_h = three_factor_gradient(params, trajectory, batch, signal)
    return GradientSet(g_x, g_h, readout_gradient(trajectory, d_outputs), "eprop")


class ModulatorConfig(RuleSimObject):
    """Cell-type specific modulatory filters of the ModProp rule.

    Taps are F_{αβ,s} = μ^{s−1} · mean of (W_h^s) over the block of
    postsynaptic type α and presynaptic type β, for s = 1..s_max.
    """

    def __init__(
        self,
        mu: float = 0.25,
        s_max: int = 5,
        cell_type_of: Optional[List[int]] = None,
    ) -> None:
        self.mu = mu
        self.s_max = s_max
        self.cell_type_of = cell_type_of

    def cell_types(self, params: NetworkParams) -> torch.Tensor:
        if self.cell_type_of is not None:
            types = torch.as_tensor(self.cell_type_of, dtype=torch.long)
            if types.shape != (params.n_neurons,):
                raise ConfigurationError(
                    f"cell_type_of has {types.numel()} entries for {params.n_neurons} neurons"
                )
            return types
        types = params.cell_types()
        if types is None:
            raise UnsupportedConfigurationError("ModProp needs cell types or a Dale mask")
        return types

    def filter_taps(self, w_h: torch.Tensor, cell_types: torch.Tensor) -> torch.Tensor:
        if self.s_max < 0:
            raise ConfigurationError(f"s_max={self.s_max} must be >= 0")
        n_types = int(cell_types.max().item()) + 1
        membership = F.one_hot(cell_types, n_types).to(w_h.dtype)
        counts = membership.sum(dim=0)
        block_sizes = counts[:, None] * counts[None, :]
        taps = []
        power = torch.eye(w_h.shape[0], dtype=w_h.dtype)
        for s in range(1, self.s_max + 1):
            power = power @ w_h
            block_sums = membership.T @ power @ membership
            taps.append(self.mu ** (s - 1) * block_sums / block_sizes)
        if not taps:
            return torch.zeros(0, n_types, n_types, dtype=w_h.dtype)
        return torch.stack(taps)


def modulated_signal(
    params: NetworkParams,
    trajectory: StateTrajectory,
    signal: torch.Tensor,
    modulator: ModulatorConfig,
) -> torch.Tensor:
    """I'_{i,τ} = I_{i,τ} + Σ_s Σ_α A_{α,τ+s} F_{α,type(i),s}, with
    A_{α,t} = Σ_{l∈α} I_{l,t} f'(h_{l,t})."""
    cell_types = modulator.cell_types(params)
    taps = modulator.filter_taps(params.w_h, cell_types)
    membership = F.one_hot(cell_types, taps.shape[-1]).to(signal.dtype)
    activity = (signal * trajectory.derivatives()) @ membership
    n_steps = signal.shape[1]

    correction = torch.zeros_like(activity)
    for s in range(1, min(taps.shape[0], n_steps - 1) + 1):
        shifted = torch.zeros_like(activity)
        shifted[:, : n_steps - s] = activity[:, s:]
        correction += shifted @ taps[s - 1]
    return signal + correction[..., cell_types]


def modprop_gradient(
    params: NetworkParams,
    batch: TrialBatch,
    noise_seed: int,
    modulator: Optional[ModulatorConfig] = None,
    loss_kind: LossKind = LossKind.MSE,
    feedback: Optional[torch.Tensor] = None,
) -> GradientSet:
    modulator = modulator or ModulatorConfig()
    if params.activation != Activation.RELU:
        raise UnsupportedConfigurationError(
            f"ModProp is defined for relu units, got {params.activation.value}"
        )
    if params.dale_mask is None and modulator.cell_type_of is None:
        raise UnsupportedConfigurationError("ModProp needs a Dale mask (excitatory_fraction)")

    trajectory, _, d_outputs, signal = forward_and_signal(
        params, batch, noise_seed, loss_kind, feedback
    )
    signal = modulated_signal(params, trajectory, signal, modulator)
    g_x, g_h = three_factor_gradient(params, trajectory, batch, signal)
    return GradientSet(g_x, g_h, readout_gradient(trajectory, d_outputs), "modprop")


class EProp(LearningRule):
    tag = "eprop"

    def __init__(self) -> None:
        pass

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return eprop_gradient(params, batch, noise_seed, loss_kind, feedback)


class ModProp(LearningRule):
    tag = "modprop"

    def __init__(self, mu: float = 0.25, s_max: int = 5) -> None:
        self.mu = mu
        self.s_max = s_max
        self.modulator = ModulatorConfig(mu=mu, s_max=s_max)

    def gradient(self, params, batch, noise_seed, loss_kind=LossKind.MSE, feedback=None):
        return modprop_gradient(params, batch, noise_seed, self.modulator, loss_kind, feedback)
