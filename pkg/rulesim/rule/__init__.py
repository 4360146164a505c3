from typing import Dict, Type

from ..util import ConfigurationError
from .rule import GradientSet, LearningRule
from .bptt import BPTT, TruncatedBPTT, bptt_gradient, truncated_bptt_gradient
from .eprop import (
    EligibilityState,
    EProp,
    ModProp,
    ModulatorConfig,
    eprop_gradient,
    modprop_gradient,
    three_factor_gradient,
)
from .perturbation import (
    EvolutionStrategies,
    NodePerturbation,
    es_estimate,
    evolution_strategies_gradient,
    node_perturbation_gradient,
    node_perturbation_signal,
)
from .feedback import feedback_alignment_signal, init_feedback

RULES: Dict[str, Type[LearningRule]] = {
    rule.tag: rule
    for rule in [BPTT, TruncatedBPTT, EProp, ModProp, NodePerturbation, EvolutionStrategies]
}


def make_rule(
    name: str,
    truncation_k: int = 10,
    sigma: float = 0.01,
    es_samples: int = 50,
    mu: float = 0.25,
    s_max: int = 5,
) -> LearningRule:
    if name not in RULES:
        raise ConfigurationError(f"unknown rule {name!r}, choose from {sorted(RULES)}")
    if name == "tbptt":
        return TruncatedBPTT(truncation_k)
    if name == "modprop":
        return ModProp(mu, s_max)
    if name == "nodep":
        return NodePerturbation(sigma)
    if name == "es":
        return EvolutionStrategies(sigma, es_samples)
    return RULES[name]()
