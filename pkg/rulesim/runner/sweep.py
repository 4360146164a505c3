from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple
import csv
import logging
import os

import numpy as np
import torch
from scipy import stats
from torch import multiprocessing as mp

from ..similarity import ResponseMatrix
from ..util import ConfigurationError, RuleSimObject, configure_worker_logging, get_logging_config_dict
from .config import ExperimentConfig
from .runner import RunResult, Runner
from .trace import format_value


class SweepSpec(RuleSimObject):
    def __init__(
        self,
        rules: Sequence[str] = ("bptt",),
        gains: Sequence[float] = (0.0, 0.5, 1.0, 1.5),
        lrs: Sequence[float] = (3e-3, 1e-3, 3e-4, 1e-4),
        seeds: Sequence[int] = (0, 1, 2, 3),
        target_accuracy: float = 0.8,
        measure: str = "procrustes",
        n_worker: int = 1,
        note: str = "synthetic reference; absolute distances differ from recorded data",
    ) -> None:
        self.rules = list(rules)
        self.gains = [float(gain) for gain in gains]
        self.lrs = [float(lr) for lr in lrs]
        self.seeds = [int(seed) for seed in seeds]
        self.target_accuracy = target_accuracy
        self.measure = measure
        self.n_worker = n_worker
        self.note = note

    def validate(self, base: ExperimentConfig) -> None:
        for name in ["rules", "gains", "lrs", "seeds"]:
            if not getattr(self, name):
                raise ConfigurationError(f"sweep list {name} is empty")
        if base.training.iterations < base.training.eval_every:
            raise ConfigurationError(
                f"iteration budget {base.training.iterations} is below the "
                f"evaluation cadence {base.training.eval_every}"
            )
        if not 0 < self.target_accuracy <= 1:
            raise ConfigurationError(f"{self.target_accuracy=} must lie in (0, 1]")

    def configs(self, base: ExperimentConfig) -> List[ExperimentConfig]:
        self.validate(base)
        return [
            base.with_overrides(
                network={"gain": gain}, training={"rule": rule, "lr": lr, "seed": seed}
            )
            for rule, gain, lr, seed in product(self.rules, self.gains, self.lrs, self.seeds)
        ]


class Job(NamedTuple):
    config_dict: Dict
    out_dir: Optional[str]
    reference: Optional[str]
    target_accuracy: float
    keep_snapshots: bool
    name: str
    log_config_dict: Optional[Dict] = None


def run_job(job: Job) -> RunResult:
    if job.log_config_dict is not None:
        configure_worker_logging(job.log_config_dict, job.name)
    config = ExperimentConfig.from_config_dict(job.config_dict)
    reference = ResponseMatrix.read_csv(job.reference) if job.reference else None
    runner = Runner(config, job.out_dir, reference, keep_snapshots=job.keep_snapshots)
    runner.run()
    return runner.result(job.target_accuracy)


def _init_worker():
    torch.set_num_threads(1)


def run_jobs(jobs: List[Job], n_worker: int) -> List[RunResult]:
    """Run independent training jobs inline or on a spawn-context worker pool."""
    logger = logging.getLogger(__name__)
    if n_worker <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    log_config_dict = get_logging_config_dict()
    jobs = [job._replace(log_config_dict=log_config_dict) for job in jobs]
    logger.info(f"running {len(jobs)} jobs on {n_worker} workers")
    context = mp.get_context("spawn")
    with context.Pool(n_worker, initializer=_init_worker) as pool:
        return pool.map(run_job, jobs)


@dataclass
class SweepCell:
    rule: str
    gain: float
    lr: float
    seeds: List[int] = field(default_factory=list)
    distances: List[Optional[float]] = field(default_factory=list)
    untrained: List[Optional[float]] = field(default_factory=list)

    @property
    def key(self) -> Tuple[str, float, float]:
        return self.rule, self.gain, self.lr

    @property
    def reached(self) -> np.ndarray:
        return np.array([d for d in self.distances if d is not None], dtype=np.float64)

    @property
    def unreachable(self) -> bool:
        return self.reached.size == 0

    @property
    def mean(self) -> Optional[float]:
        return None if self.unreachable else float(self.reached.mean())

    @property
    def std(self) -> Optional[float]:
        reached = self.reached
        if reached.size < 2:
            return None if reached.size == 0 else 0.0
        return float(reached.std(ddof=1))

    @property
    def untrained_mean(self) -> Optional[float]:
        values = [d for d in self.untrained if d is not None]
        return float(np.mean(values)) if values else None


class Comparison(NamedTuple):
    first: Tuple[str, float, float]
    second: Tuple[str, float, float]
    t_statistic: float
    p_value: float


@dataclass
class SweepTable:
    cells: List[SweepCell]
    comparisons: List[Comparison]
    target_accuracy: float
    note: str = ""

    def cell(self, rule: str, gain: float, lr: float) -> SweepCell:
        for cell in self.cells:
            if cell.key == (rule, float(gain), float(lr)):
                return cell
        raise KeyError((rule, gain, lr))

    def write_csv(self, out_dir: str) -> List[str]:
        sweep_file = os.path.join(out_dir, "sweep.csv")
        with open(sweep_file, "w", newline="", encoding="utf-8") as csvfile:
            csvfile.write(f"# target_accuracy={self.target_accuracy} note={self.note}\n")
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow(
                ["rule", "gain", "lr", "n_seeds", "n_reached", "mean", "std", "untrained_mean", "status"]
            )
            for cell in self.cells:
                values = [cell.rule, cell.gain, cell.lr, len(cell.seeds), cell.reached.size]
                values += [cell.mean, cell.std, cell.untrained_mean]
                values.append("unreachable" if cell.unreachable else "ok")
                writer.writerow([format_value(value) for value in values])

        runs_file = os.path.join(out_dir, "sweep_runs.csv")
        with open(runs_file, "w", newline="", encoding="utf-8") as csvfile:
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow(["rule", "gain", "lr", "seed", "distance", "untrained_distance"])
            for cell in self.cells:
                for seed, distance, untrained in zip(cell.seeds, cell.distances, cell.untrained):
                    values = [cell.rule, cell.gain, cell.lr, seed, distance, untrained]
                    writer.writerow([format_value(value) for value in values])

        stats_file = os.path.join(out_dir, "sweep_stats.csv")
        with open(stats_file, "w", newline="", encoding="utf-8") as csvfile:
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow(["rule_a", "gain_a", "lr_a", "rule_b", "gain_b", "lr_b", "t", "p"])
            for comparison in self.comparisons:
                values = [*comparison.first, *comparison.second]
                values += [comparison.t_statistic, comparison.p_value]
                writer.writerow([format_value(value) for value in values])
        return [sweep_file, runs_file, stats_file]


def summarize_sweep(
    results: List[RunResult], target_accuracy: float, measure: str = "procrustes", note: str = ""
) -> SweepTable:
    logger = logging.getLogger(__name__)
    cells: Dict[Tuple[str, float, float], SweepCell] = {}
    for result in results:
        first = result.trace.rows[0]
        key = (first.rule, float(first.gain), float(first.lr))
        cell = cells.setdefault(key, SweepCell(*key))
        distance = result.trace.distance_at_accuracy(target_accuracy, measure)
        if distance is None:
            logger.warning(f"{key} seed {first.seed} never reached accuracy {target_accuracy}")
        cell.seeds.append(first.seed)
        cell.distances.append(distance)
        cell.untrained.append(getattr(first, measure))

    comparisons = []
    for a, b in combinations(cells.values(), 2):
        if a.reached.size < 2 or b.reached.size < 2:
            continue
        test = stats.ttest_ind(a.reached, b.reached)
        comparisons.append(Comparison(a.key, b.key, float(test.statistic), float(test.pvalue)))
    return SweepTable(list(cells.values()), comparisons, target_accuracy, note)


def run_gain_sweep(
    base: ExperimentConfig,
    sweep: SweepSpec,
    out_dir: str,
    reference: str,
    n_worker: Optional[int] = None,
) -> SweepTable:
    """Train every (rule, gain, lr, seed) cell and tabulate the distance to the
    reference at the target accuracy."""
    if reference is None:
        raise ConfigurationError("a gain sweep needs a reference response file")
    ResponseMatrix.read_csv(reference)
    os.makedirs(out_dir, exist_ok=True)
    jobs = [
        Job(config.get_config_dict(), out_dir, reference, sweep.target_accuracy, False, f"job{i}")
        for i, config in enumerate(sweep.configs(base))
    ]
    results = run_jobs(jobs, sweep.n_worker if n_worker is None else n_worker)
    table = summarize_sweep(results, sweep.target_accuracy, sweep.measure, sweep.note)
    table.write_csv(out_dir)
    return table
