from time import perf_counter
from typing import Dict, List, NamedTuple, Optional
import logging
import os

import numpy as np

from ..network import (
    NetworkParams,
    StateTrajectory,
    init_params,
    loss_and_signal,
    normalized_accuracy,
    rnn_forward,
    weight_eigenspectrum,
)
from ..optim import Adam
from ..rule import GradientSet, bptt_gradient, init_feedback
from ..similarity import Measure, ResponseMatrix, compare_all
from ..task import trial_average
from ..util import ConfigHandler, IngestionError, RuleSimObject, derive_seed
from .config import ExperimentConfig
from .trace import TraceRow, TrainingTrace


class RunResult(NamedTuple):
    trace: TrainingTrace
    eigenvalues: np.ndarray
    snapshot: Optional[ResponseMatrix]


class Runner(RuleSimObject):
    """Trains one network under one rule and evaluates it on a fixed cadence.

    Evaluation rows are written at iteration 0, every ``eval_every`` iterations
    and after the final update.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        out_dir: Optional[str] = None,
        reference: Optional[ResponseMatrix] = None,
        keep_snapshots: bool = False,
        include_wall_time: bool = False,
    ) -> None:
        self.config = config
        self.out_dir = out_dir
        self.reference = reference
        self.keep_snapshots = keep_snapshots
        self.include_wall_time = include_wall_time
        self.logger = logging.getLogger(self.__module__)

        training = config.training
        self.seed = training.seed
        self.task = config.task
        self.rule = training.make_rule()
        self.params = init_params(config.network, derive_seed(self.seed, "init"))
        self.optimizer = Adam(self.params, training.lr, training.betas, training.eps)
        self.feedback = None
        if training.feedback == "random":
            self.feedback = init_feedback(config.network, derive_seed(self.seed, "feedback"))
        self.eval_batch = self.task.evaluation_batch(
            config.similarity.eval_trials_per_condition, derive_seed(self.seed, "evaluation")
        )
        if reference is not None:
            self._check_reference(reference)

        self.trace = TrainingTrace(config.config_hash)
        self.snapshots: Dict[int, ResponseMatrix] = {}
        self._last_batch = None
        self.results_file = None
        if out_dir is not None:
            os.makedirs(out_dir, exist_ok=True)
            self.results_file = os.path.join(out_dir, f"trace_{self.trace.config_hash}.csv")
        self._start = perf_counter()

    def _check_reference(self, reference: ResponseMatrix) -> None:
        start, stop = self.task.response_window
        if reference.n_conditions != self.task.n_conditions or reference.n_steps != stop - start:
            raise IngestionError(
                f"reference has {reference.n_conditions} conditions x {reference.n_steps} steps, "
                f"the task compares {self.task.n_conditions} x {stop - start}"
            )

    def responses(self, trajectory: Optional[StateTrajectory] = None) -> ResponseMatrix:
        """Condition-averaged activity of the noiseless network in the response window."""
        if trajectory is None:
            trajectory = rnn_forward(self.params.noiseless(), self.eval_batch, 0)
        values = trajectory.rates if self.config.similarity.compare == "rates" else trajectory.hidden
        start, stop = self.task.response_window
        return trial_average(values[:, start:stop], self.eval_batch.condition_ids)

    def evaluate(self, iteration: int) -> TraceRow:
        trajectory = rnn_forward(self.params.noiseless(), self.eval_batch, 0)
        loss, _, _ = loss_and_signal(
            self.params, trajectory, self.eval_batch, self.task.loss_kind, self.feedback
        )
        accuracy = normalized_accuracy(trajectory, self.eval_batch, self.task.loss_kind)
        row = TraceRow(
            iteration=iteration,
            rule=self.rule.tag,
            seed=int(self.seed),
            task=self.task.kind,
            gain=float(self.config.network.gain),
            lr=float(self.config.training.lr),
            loss=float(loss),
            normalized_accuracy=float(accuracy),
        )
        if self.reference is not None or self.keep_snapshots:
            model = self.responses(trajectory)
            if self.keep_snapshots:
                self.snapshots[iteration] = model
            if self.reference is not None:
                similarity = self.config.similarity
                scores = compare_all(
                    self.reference, model, similarity.measures, similarity.center, similarity.cca_rank
                )
                for score in scores:
                    setattr(row, score.measure.value, score.value)
        if self.include_wall_time:
            row.wall_time = perf_counter() - self._start
        return row

    def gradient(self, iteration: int) -> GradientSet:
        training = self.config.training
        batch = self.task.generate(training.batch_size, derive_seed(self.seed, "batch", iteration))
        noise_seed = derive_seed(self.seed, "noise", iteration)
        grads = self.rule.gradient(self.params, batch, noise_seed, self.task.loss_kind, self.feedback)
        self._last_batch = (batch, noise_seed)
        return grads

    def alignment(self, grads: GradientSet) -> float:
        batch, noise_seed = self._last_batch
        exact = bptt_gradient(self.params, batch, noise_seed, self.task.loss_kind)
        return grads.cosine_similarity(exact)

    def train_step(self, grads: GradientSet) -> None:
        if not grads.is_finite():
            self.logger.warning(f"non-finite {grads.rule_tag} gradient, update skipped")
            return
        clip_norm = self.config.training.clip_norm
        if clip_norm is not None:
            grads = grads.clip_norm(clip_norm)
        self.optimizer.apply_gradients(grads)

    def _record(self, row: TraceRow) -> None:
        self.trace.append(row)
        if self.results_file is not None:
            self.trace.append_row(self.results_file, row, self.include_wall_time)
        distance = "" if row.procrustes is None else f", Procrustes: {row.procrustes:.4f}"
        log_info = (
            f"{row.rule} seed {row.seed} iteration {row.iteration}: "
            f"Accuracy: {row.normalized_accuracy:.4f}{distance}, "
            f"Elapsed: {perf_counter() - self._start:.1f}s"
        )
        self.logger.info(log_info)

    def run(self) -> TrainingTrace:
        training = self.config.training
        if self.results_file is not None:
            self.trace.write_header(self.results_file, self.include_wall_time)
            ConfigHandler().save_config_dict(
                self.config.get_config_dict(),
                os.path.join(self.out_dir, f"config_{self.trace.config_hash}.yml"),
            )
        for iteration in range(training.iterations + 1):
            evaluate = iteration % training.eval_every == 0 or iteration == training.iterations
            row = self.evaluate(iteration) if evaluate else None
            if iteration == training.iterations:
                self._record(row)
                break
            grads = self.gradient(iteration)
            if row is not None:
                if training.log_grad_alignment:
                    row.grad_cosine = self.alignment(grads)
                self._record(row)
            self.logger.debug(f"iteration {iteration}: |g| = {grads.global_norm():.3e}")
            self.train_step(grads)

        if self.out_dir is not None:
            self.params.save(os.path.join(self.out_dir, f"params_{self.trace.config_hash}.pt"))
        return self.trace

    def snapshot_at_accuracy(self, target: float) -> Optional[ResponseMatrix]:
        """Responses at the first evaluation reaching ``target``, else the last one."""
        if not self.snapshots:
            return None
        iteration = self.trace.first_iteration_at(target)
        if iteration is None:
            iteration = max(self.snapshots)
        return self.snapshots[iteration]

    def result(self, target: float = 0.8) -> RunResult:
        return RunResult(
            self.trace, weight_eigenspectrum(self.params), self.snapshot_at_accuracy(target)
        )


def run_training(
    config: ExperimentConfig,
    out_dir: Optional[str] = None,
    reference: Optional[ResponseMatrix] = None,
) -> TrainingTrace:
    return Runner(config, out_dir, reference).run()


def load_reference(config: ExperimentConfig, override: Optional[str] = None) -> Optional[ResponseMatrix]:
    path = override or config.similarity.reference
    if path is None:
        return None
    return ResponseMatrix.read_csv(path)


def final_params(out_dir: str, config_hash: str) -> NetworkParams:
    return NetworkParams.load(os.path.join(out_dir, f"params_{config_hash}.pt"))
