from dataclasses import dataclass, replace
from enum import Enum
from math import sqrt
from typing import List, Optional, Tuple
import logging

import numpy as np
import torch

from ..task.batch import TrialBatch
from ..util import (
    ConfigurationError,
    RuleSimObject,
    ShapeError,
    torch_generator,
)


class Activation(str, Enum):
    RETANH = "retanh"
    RELU = "relu"


class NetworkConfig(RuleSimObject):
    """Structure and initialization of one leaky rate RNN.

    ``n_inputs``/``n_outputs``/``n_neurons`` may be left ``None`` and are then
    taken from the task (see :meth:`with_task_defaults`).
    """

    def __init__(
        self,
        n_neurons: Optional[int] = None,
        n_inputs: Optional[int] = None,
        n_outputs: Optional[int] = None,
        dt: Optional[float] = None,
        tau_m: float = 100.0,
        activation: str = "retanh",
        noise_std: float = 0.1,
        gain: float = 1.0,
        scale_readout_by_gain: bool = True,
        excitatory_fraction: Optional[float] = None,
        connection_density: Optional[float] = None,
        dtype: str = "float64",
    ) -> None:
        self.n_neurons = n_neurons
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self.dt = dt
        self.tau_m = tau_m
        self.activation = activation
        self.noise_std = noise_std
        self.gain = gain
        self.scale_readout_by_gain = scale_readout_by_gain
        self.excitatory_fraction = excitatory_fraction
        self.connection_density = connection_density
        self.dtype = dtype

    @property
    def beta(self) -> float:
        if self.dt is None:
            raise ConfigurationError("dt is not set and no task supplied one")
        if self.tau_m <= 0 or self.dt <= 0 or self.dt >= self.tau_m:
            raise ConfigurationError(
                f"leak factor needs 0 < dt < tau_m, got {self.dt=} and {self.tau_m=}"
            )
        return 1.0 - self.dt / self.tau_m

    @property
    def torch_dtype(self) -> torch.dtype:
        dtype = getattr(torch, str(self.dtype), None)
        if not isinstance(dtype, torch.dtype):
            raise ConfigurationError(f"unknown {self.dtype=}")
        return dtype

    def with_task_defaults(
        self, n_inputs: int, n_outputs: int, n_neurons: int, dt: float
    ) -> "NetworkConfig":
        config_dict = self.get_config_dict()
        if config_dict["n_inputs"] is None:
            config_dict["n_inputs"] = n_inputs
        if config_dict["n_outputs"] is None:
            config_dict["n_outputs"] = n_outputs
        if config_dict["n_neurons"] is None:
            config_dict["n_neurons"] = n_neurons
        if config_dict["dt"] is None:
            config_dict["dt"] = dt
        elif config_dict["dt"] != dt:
            raise ConfigurationError(
                f"network dt={config_dict['dt']} differs from the task dt={dt}"
            )
        return NetworkConfig.from_config_dict(config_dict)

    def validate(self) -> None:
        for name in ["n_neurons", "n_inputs", "n_outputs"]:
            value = getattr(self, name)
            if value is None or int(value) < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value}")
        _ = self.beta
        _ = self.torch_dtype
        try:
            Activation(self.activation)
        except ValueError:
            raise ConfigurationError(f"unknown {self.activation=}")
        if self.gain < 0:
            raise ConfigurationError(f"{self.gain=} must be >= 0")
        if self.noise_std < 0:
            raise ConfigurationError(f"{self.noise_std=} must be >= 0")
        for name in ["excitatory_fraction", "connection_density"]:
            value = getattr(self, name)
            if value is not None and not 0 < value <= 1:
                raise ConfigurationError(f"{name}={value} must lie in (0, 1]")


@dataclass
class NetworkParams:
    w_x: torch.Tensor
    w_h: torch.Tensor
    w_out: torch.Tensor
    beta: float
    dt: float
    tau_m: float
    activation: Activation
    noise_std: float
    gain: float
    dale_mask: Optional[torch.Tensor] = None
    sparsity_mask: Optional[torch.Tensor] = None

    @property
    def n_neurons(self) -> int:
        return self.w_h.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.w_x.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.w_out.shape[0]

    @property
    def dtype(self) -> torch.dtype:
        return self.w_h.dtype

    def parameters(self) -> List[torch.Tensor]:
        return [self.w_x, self.w_h, self.w_out]

    def project(self) -> "NetworkParams":
        """Re-apply Dale and sparsity masks in place; idempotent."""
        with torch.no_grad():
            if self.dale_mask is not None:
                self.w_h.copy_(self.w_h.abs() * self.dale_mask)
            if self.sparsity_mask is not None:
                self.w_h.mul_(self.sparsity_mask)
        return self

    def cell_types(self) -> Optional[torch.Tensor]:
        # 0 excitatory, 1 inhibitory, read from the presynaptic column signs
        if self.dale_mask is None:
            return None
        return (self.dale_mask[0] < 0).to(torch.long)

    def with_weights(
        self, w_x: torch.Tensor, w_h: torch.Tensor, w_out: torch.Tensor
    ) -> "NetworkParams":
        return replace(self, w_x=w_x, w_h=w_h, w_out=w_out)

    def noiseless(self) -> "NetworkParams":
        return replace(self, noise_std=0.0)

    def clone(self) -> "NetworkParams":
        return replace(
            self,
            w_x=self.w_x.detach().clone(),
            w_h=self.w_h.detach().clone(),
            w_out=self.w_out.detach().clone(),
        )

    def state_dict(self) -> dict:
        return {
            "w_x": self.w_x,
            "w_h": self.w_h,
            "w_out": self.w_out,
            "beta": self.beta,
            "dt": self.dt,
            "tau_m": self.tau_m,
            "activation": self.activation.value,
            "noise_std": self.noise_std,
            "gain": self.gain,
            "dale_mask": self.dale_mask,
            "sparsity_mask": self.sparsity_mask,
        }

    def save(self, file_path: str) -> None:
        torch.save(self.state_dict(), file_path)

    @classmethod
    def load(cls, file_path: str) -> "NetworkParams":
        state = torch.load(file_path)
        state["activation"] = Activation(state["activation"])
        return cls(**state)


@dataclass
class StateTrajectory:
    """Forward pass record; index ``t`` of every array holds step ``t + 1``."""

    hidden: torch.Tensor
    rates: torch.Tensor
    outputs: torch.Tensor
    noise_seed: int
    activation: Activation = Activation.RETANH

    def derivatives(self) -> torch.Tensor:
        _, derivative = activation_apply(self.hidden, self.activation)
        return derivative

    def presynaptic_rates(self) -> torch.Tensor:
        """f(h_{t-1}) aligned with step t; f(h_0) = 0."""
        zeros = torch.zeros_like(self.rates[:, :1])
        return torch.cat([zeros, self.rates[:, :-1]], dim=1)


def activation_apply(
    x: torch.Tensor, kind: Activation
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Value and derivative of the activation; the derivative at 0 is 0."""
    kind = Activation(kind)
    if kind == Activation.RETANH:
        tanh = torch.tanh(x)
        value = torch.clamp(tanh, min=0.0)
        derivative = torch.where(x > 0, 1.0 - tanh**2, torch.zeros_like(x))
    else:
        value = torch.clamp(x, min=0.0)
        derivative = (x > 0).to(x.dtype)
    return value, derivative


def init_params(config: NetworkConfig, seed: int) -> NetworkParams:
    """Draw W_h ~ N(0, g²/N), W_x and w_out ~ U(±1/sqrt(fan_in)); w_out scaled by g.

    With a Dale mask the excitatory columns of W_h are divided by the E/I ratio.
    """
    config.validate()
    logger = logging.getLogger(__name__)
    dtype = config.torch_dtype
    generator = torch_generator(seed)
    n, n_in, n_out = int(config.n_neurons), int(config.n_inputs), int(config.n_outputs)

    w_h = torch.randn(n, n, generator=generator, dtype=dtype) * (config.gain / sqrt(n))
    w_x = (torch.rand(n, n_in, generator=generator, dtype=dtype) * 2 - 1) / sqrt(n_in)
    w_out = (torch.rand(n_out, n, generator=generator, dtype=dtype) * 2 - 1) / sqrt(n)
    if config.scale_readout_by_gain:
        w_out = w_out * config.gain

    dale_mask = None
    if config.excitatory_fraction is not None:
        n_excitatory = int(np.floor(config.excitatory_fraction * n + 0.5))
        signs = torch.ones(n, dtype=dtype)
        signs[n_excitatory:] = -1.0
        dale_mask = signs.expand(n, n).clone()
        if 0 < n_excitatory < n:
            # E/I balance: excitatory columns shrunk by n_I / n_E, row sums 0 in expectation
            w_h[:, :n_excitatory] *= (n - n_excitatory) / n_excitatory

    sparsity_mask = None
    if config.connection_density is not None:
        draw = torch.rand(n, n, generator=generator, dtype=dtype)
        sparsity_mask = (draw < config.connection_density).to(dtype)

    params = NetworkParams(
        w_x=w_x,
        w_h=w_h,
        w_out=w_out,
        beta=config.beta,
        dt=config.dt,
        tau_m=config.tau_m,
        activation=Activation(config.activation),
        noise_std=float(config.noise_std),
        gain=float(config.gain),
        dale_mask=dale_mask,
        sparsity_mask=sparsity_mask,
    )
    params.project()
    log_debug = f"init_params: {n=} {n_in=} {n_out=} gain={config.gain} beta={params.beta:.4f} {seed=}"
    logger.debug(log_debug)
    return params


def hidden_noise(params: NetworkParams, shape: Tuple[int, ...], noise_seed: int) -> torch.Tensor:
    if params.noise_std == 0:
        return torch.zeros(shape, dtype=params.dtype)
    generator = torch_generator(noise_seed)
    return torch.randn(shape, generator=generator, dtype=params.dtype) * params.noise_std


def rnn_forward(params: NetworkParams, batch: TrialBatch, noise_seed: int) -> StateTrajectory:
    """h_{t+1} = β h_t + (1 − β)(W_h f(h_t) + W_x x_t) + ξ_t with h_0 = 0."""
    inputs = batch.inputs.to(params.dtype)
    if inputs.dim() != 3 or inputs.shape[-1] != params.n_inputs:
        raise ShapeError(
            f"batch inputs {tuple(inputs.shape)} do not match n_inputs={params.n_inputs}"
        )
    n_trials, n_steps, _ = inputs.shape
    noise = hidden_noise(params, (n_trials, n_steps, params.n_neurons), noise_seed)

    drive = inputs @ params.w_x.T
    beta = params.beta
    state = torch.zeros(n_trials, params.n_neurons, dtype=params.dtype)
    rate = torch.zeros_like(state)
    hidden, rates = [], []
    for t in range(n_steps):
        state = beta * state + (1 - beta) * (rate @ params.w_h.T + drive[:, t]) + noise[:, t]
        rate, _ = activation_apply(state, params.activation)
        hidden.append(state)
        rates.append(rate)

    hidden = torch.stack(hidden, dim=1)
    rates = torch.stack(rates, dim=1)
    outputs = rates @ params.w_out.T
    return StateTrajectory(hidden, rates, outputs, noise_seed, params.activation)


def weight_eigenspectrum(params: NetworkParams) -> np.ndarray:
    return torch.linalg.eigvals(params.w_h.detach()).numpy()
