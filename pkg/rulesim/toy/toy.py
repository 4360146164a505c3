from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union
import logging

import numpy as np
from numpy.polynomial import polynomial as P

from ..util import ConfigurationError, DegenerateInputError


class FlowRule(str, Enum):
    BPTT = "bptt"
    EPROP = "eprop"


class Verdict(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ToyProblem:
    """Scalar linear RNN with input x_1..x_T and target 0.

    The readout is the polynomial ŷ(W) = Σ_{t=0}^{T−1} Wᵗ x_{T−t}.
    """

    coeffs: Tuple[float, ...]
    tau: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise ConfigurationError("a toy problem needs at least one input step")
        if self.tau <= 0:
            raise ConfigurationError(f"tau={self.tau} must be > 0")

    @property
    def n_steps(self) -> int:
        return len(self.coeffs)

    @property
    def power_coeffs(self) -> np.ndarray:
        # coefficient of W^t is x_{T-t}
        return np.asarray(self.coeffs[::-1])

    @property
    def eprop_coefficient(self) -> float:
        """x_{T−1}, the only input the truncated e-prop flow sees."""
        return self.coeffs[-2] if self.n_steps >= 2 else 0.0

    def real_roots(self) -> np.ndarray:
        coefficients = np.trim_zeros(self.power_coeffs, "b")
        if coefficients.size < 2:
            return np.empty(0)
        roots = P.polyroots(coefficients)
        return np.sort(roots[np.abs(roots.imag) < 1e-9].real)


def poly_readout(problem: ToyProblem, w: Union[float, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    coefficients = problem.power_coeffs
    return P.polyval(w, coefficients), P.polyval(w, P.polyder(coefficients))


def flow_field(problem: ToyProblem, w: Union[float, np.ndarray], rule: Union[FlowRule, str]):
    """τ dW/dt: −ŷ ŷ′ for BPTT, −ŷ x_{T−1} for e-prop."""
    value, slope = poly_readout(problem, w)
    if FlowRule(rule) == FlowRule.BPTT:
        return -value * slope / problem.tau
    return -value * problem.eprop_coefficient / problem.tau


def eprop_jacobian(problem: ToyProblem, w: Union[float, np.ndarray]):
    _, slope = poly_readout(problem, w)
    return -slope * problem.eprop_coefficient / problem.tau


class _ProblemBank:
    """Several toy problems of equal length evaluated elementwise."""

    def __init__(self, problems: Sequence[ToyProblem], rule: FlowRule) -> None:
        lengths = {problem.n_steps for problem in problems}
        if len(lengths) != 1:
            raise ConfigurationError("problems in one integration must share their length")
        self.coefficients = np.stack([problem.power_coeffs for problem in problems], axis=1)
        self.slopes = P.polyder(self.coefficients, axis=0)
        self.eprop = np.array([problem.eprop_coefficient for problem in problems])
        self.tau = np.array([problem.tau for problem in problems])
        self.rule = rule

    def readout(self, w: np.ndarray, index: np.ndarray) -> np.ndarray:
        return P.polyval(w, self.coefficients[:, index], tensor=False)

    def flow(self, w: np.ndarray, index: np.ndarray) -> np.ndarray:
        value = self.readout(w, index)
        if self.rule == FlowRule.BPTT:
            factor = P.polyval(w, self.slopes[:, index], tensor=False)
        else:
            factor = self.eprop[index]
        return -value * factor / self.tau[index]


class FlowResult(NamedTuple):
    verdict: Verdict
    w_end: float
    steps: int
    trajectory: np.ndarray
    root: Optional[float]


def _integrate(
    bank: _ProblemBank,
    w0: np.ndarray,
    dt: float,
    steps: int,
    output_tol: float,
    step_tol: float,
    divergence_threshold: float,
    record: bool,
):
    if dt <= 0:
        raise ConfigurationError(f"integration {dt=} must be > 0")
    w = np.array(w0, dtype=np.float64)
    verdicts = np.empty(w.shape, dtype=object)
    verdicts.fill(Verdict.UNDECIDED)
    n_steps = np.full(w.shape, steps)
    everyone = np.arange(w.size)

    at_root = np.abs(bank.readout(w, everyone)) < output_tol
    verdicts[at_root] = Verdict.CONVERGED
    n_steps[at_root] = 0
    active = ~at_root
    trajectory = [w[0]] if record else None

    for step in range(1, steps + 1):
        index = np.flatnonzero(active)
        if index.size == 0:
            break
        current = w[index]
        k1 = bank.flow(current, index)
        k2 = bank.flow(current + 0.5 * dt * k1, index)
        k3 = bank.flow(current + 0.5 * dt * k2, index)
        k4 = bank.flow(current + dt * k3, index)
        updated = current + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        w[index] = updated
        if record:
            trajectory.append(updated[0])

        diverged = ~np.isfinite(updated) | (np.abs(updated) > divergence_threshold)
        with np.errstate(invalid="ignore", over="ignore"):
            converged = (
                ~diverged
                & (np.abs(bank.readout(updated, index)) < output_tol)
                & (np.abs(updated - current) < step_tol)
            )
        verdicts[index[diverged]] = Verdict.DIVERGED
        verdicts[index[converged]] = Verdict.CONVERGED
        n_steps[index[diverged | converged]] = step
        active[index[diverged | converged]] = False

    verdicts = np.array([Verdict(v) for v in verdicts.ravel()], dtype=object).reshape(w.shape)
    return w, verdicts, n_steps, (np.asarray(trajectory) if record else None)


def _nearest_root(problem: ToyProblem, w: float) -> Optional[float]:
    roots = problem.real_roots()
    if roots.size == 0:
        return None
    return float(roots[np.argmin(np.abs(roots - w))])


def _check_rule(problem: ToyProblem, rule: FlowRule) -> None:
    if rule == FlowRule.EPROP and problem.eprop_coefficient == 0:
        raise DegenerateInputError("x_{T-1} = 0 makes the e-prop flow vanish identically")


def integrate_flow(
    problem: ToyProblem,
    w0: float,
    rule: Union[FlowRule, str],
    dt: float = 1e-3,
    steps: int = 1_000_000,
    output_tol: float = 1e-10,
    step_tol: float = 1e-12,
    divergence_threshold: float = 1e6,
) -> FlowResult:
    """Classical RK4 integration of the flow from ``w0``.

    Converged when |ŷ| < ``output_tol`` and the last step moved W by less than
    ``step_tol``; diverged once |W| exceeds ``divergence_threshold``.
    """
    rule = FlowRule(rule)
    _check_rule(problem, rule)
    bank = _ProblemBank([problem], rule)
    w, verdicts, n_steps, trajectory = _integrate(
        bank, np.array([w0]), dt, steps, output_tol, step_tol, divergence_threshold, True
    )
    verdict = verdicts[0]
    root = _nearest_root(problem, w[0]) if verdict == Verdict.CONVERGED else None
    logger = logging.getLogger(__name__)
    logger.debug(f"{rule.value} flow from W0={w0}: {verdict.value} after {n_steps[0]} steps")
    return FlowResult(verdict, float(w[0]), int(n_steps[0]), trajectory, root)


class BasinScan(NamedTuple):
    w0: np.ndarray
    verdicts: List[Verdict]
    w_end: np.ndarray
    boundaries: List[float]

    def summary(self) -> dict:
        counts = {verdict.value: 0 for verdict in Verdict}
        for verdict in self.verdicts:
            counts[verdict.value] += 1
        return {"counts": counts, "boundaries": self.boundaries}


def basin_scan(
    problem: ToyProblem,
    rule: Union[FlowRule, str],
    w0_grid: Sequence[float],
    dt: float = 1e-3,
    steps: int = 1_000_000,
    output_tol: float = 1e-10,
    step_tol: float = 1e-12,
    divergence_threshold: float = 1e6,
    root_tol: float = 1e-6,
) -> BasinScan:
    """Verdict for every initial W on the grid, integrated side by side.

    A boundary is reported between neighbouring grid points whose verdicts or
    converged endpoints differ.
    """
    rule = FlowRule(rule)
    _check_rule(problem, rule)
    w0 = np.sort(np.asarray(w0_grid, dtype=np.float64))
    if w0.size == 0 or not np.all(np.isfinite(w0)):
        raise ConfigurationError("the W0 grid must be finite and nonempty")
    bank = _ProblemBank([problem] * w0.size, rule)
    w_end, verdicts, _, _ = _integrate(
        bank, w0, dt, steps, output_tol, step_tol, divergence_threshold, False
    )
    boundaries = []
    for i in range(w0.size - 1):
        changed = verdicts[i] != verdicts[i + 1]
        if not changed and verdicts[i] == Verdict.CONVERGED:
            changed = abs(w_end[i] - w_end[i + 1]) > root_tol
        if changed:
            boundaries.append(0.5 * (w0[i] + w0[i + 1]))
    return BasinScan(w0, list(verdicts), w_end, boundaries)


class ToyInstance(NamedTuple):
    problem: ToyProblem
    verdict: Verdict
    w_end: float


def scan_instances(
    coefficient_values: Sequence[float],
    n_steps: int,
    w0: float,
    rule: Union[FlowRule, str],
    dt: float = 1e-3,
    steps: int = 1_000_000,
    output_tol: float = 1e-10,
    step_tol: float = 1e-12,
    divergence_threshold: float = 1e6,
) -> List[ToyInstance]:
    """Integrate every coefficient combination on the grid from one W0.

    Instances whose e-prop flow is degenerate (x_{T−1} = 0) are skipped.
    """
    rule = FlowRule(rule)
    problems = [ToyProblem(coeffs) for coeffs in product(coefficient_values, repeat=n_steps)]
    if rule == FlowRule.EPROP:
        problems = [problem for problem in problems if problem.eprop_coefficient != 0]
    if not problems:
        return []
    bank = _ProblemBank(problems, rule)
    w_end, verdicts, _, _ = _integrate(
        bank,
        np.full(len(problems), float(w0)),
        dt,
        steps,
        output_tol,
        step_tol,
        divergence_threshold,
        False,
    )
    return [ToyInstance(p, v, float(w)) for p, v, w in zip(problems, verdicts, w_end)]


def sign_hypothesis_holds(problem: ToyProblem, trajectory: np.ndarray) -> bool:
    """sign(ŷ′(W)) = −sign(x_{T−1}) at every recorded point."""
    _, slope = poly_readout(problem, np.asarray(trajectory))
    return bool(np.all(np.sign(slope) == -np.sign(problem.eprop_coefficient)))


def contracts_near_root(trajectory: np.ndarray, root: float, radius: float) -> bool:
    """(W − W*)² is nonincreasing from the first point within ``radius``."""
    squared = (np.asarray(trajectory) - root) ** 2
    inside = np.flatnonzero(squared < radius**2)
    if inside.size == 0:
        return False
    tail = squared[inside[0] :]
    return bool(np.all(np.diff(tail) <= 0))
