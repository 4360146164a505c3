from abc import ABC, abstractmethod
from typing import List

import torch
from torch import optim

from ..network import NetworkParams
from ..rule import GradientSet
from ..util import RuleSimObject, ShapeError


class Optimizer(RuleSimObject, ABC):
    @abstractmethod
    def __init__(self, network_params: NetworkParams, *args, **kwargs) -> None:
        self.network_params = network_params

    def apply_gradients(self, grads: GradientSet) -> NetworkParams:
        """One update from externally computed gradients, then re-project masks."""
        tensors: List[torch.Tensor] = self.network_params.parameters()
        for tensor, grad in zip(tensors, grads.tensors()):
            if grad.shape != tensor.shape:
                raise ShapeError(
                    f"{grads.rule_tag} gradient {tuple(grad.shape)} for weight {tuple(tensor.shape)}"
                )
            tensor.grad = grad.detach().to(tensor.dtype).clone()
        self.step()
        self.zero_grad(set_to_none=True)
        return self.network_params.project()


class Adam(optim.Adam, Optimizer):
    def __init__(
        self,
        network_params: NetworkParams,
        lr: float = 1e-3,
        betas=(0.9, 0.999),
        eps: float = 1e-08,
        weight_decay: float = 0,
        amsgrad: bool = False,
    ) -> None:
        self.network_params = network_params

        optim.Adam.__init__(
            self,
            network_params.parameters(),
            lr,
            betas,
            eps,
            weight_decay,
            amsgrad,
        )
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.amsgrad = amsgrad


def adam_step(optimizer: Adam, params: NetworkParams, grads: GradientSet) -> NetworkParams:
    if optimizer.network_params is not params:
        raise ValueError("optimizer state belongs to a different set of parameters")
    return optimizer.apply_gradients(grads)
