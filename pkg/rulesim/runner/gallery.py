from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence
import csv
import logging
import os

import numpy as np

from ..network import Activation
from ..similarity import ResponseMatrix, procrustes_distance
from ..util import ConfigurationError, RuleSimObject
from .config import ExperimentConfig
from .runner import RunResult
from .sweep import Job, run_jobs
from .trace import TrainingTrace, format_value

ALL_RULES = ("bptt", "tbptt", "eprop", "modprop", "nodep", "es")


class GallerySpec(RuleSimObject):
    def __init__(
        self,
        rules: Sequence[str] = ALL_RULES,
        seeds: Optional[Sequence[int]] = None,
        target_accuracy: float = 0.8,
        n_worker: int = 1,
    ) -> None:
        self.rules = list(rules)
        self.seeds = None if seeds is None else [int(seed) for seed in seeds]
        self.target_accuracy = target_accuracy
        self.n_worker = n_worker


@dataclass
class GalleryResult:
    traces: Dict[str, List[TrainingTrace]]
    eigenvalues: Dict[str, np.ndarray]
    labels: List[str]
    pairwise: np.ndarray


def _supports(config: ExperimentConfig, rule: str) -> bool:
    if rule != "modprop":
        return True
    network = config.network
    return network.excitatory_fraction is not None and network.activation == Activation.RELU.value


def write_eigenvalues(file_path: str, eigenvalues: np.ndarray) -> None:
    with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow(["real", "imag"])
        for value in eigenvalues:
            writer.writerow([format_value(float(value.real)), format_value(float(value.imag))])


def read_eigenvalues(file_path: str) -> np.ndarray:
    with open(file_path, "r", newline="", encoding="utf-8") as csvfile:
        rows = list(csv.DictReader(csvfile))
    return np.array([float(row["real"]) + 1j * float(row["imag"]) for row in rows])


def write_pairwise(file_path: str, labels: List[str], distances: np.ndarray) -> None:
    with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow([""] + labels)
        for label, row in zip(labels, distances):
            writer.writerow([label] + [format_value(float(value)) for value in row])


def run_rule_gallery(
    config: ExperimentConfig,
    gallery: GallerySpec,
    out_dir: str,
    reference: Optional[str] = None,
    n_worker: Optional[int] = None,
) -> GalleryResult:
    """Train every rule from the same initialization and task stream.

    The first seed also provides the eigenvalue dumps and the pairwise
    Procrustes matrix of the snapshots at the target accuracy.
    """
    logger = logging.getLogger(__name__)
    rules = []
    for rule in gallery.rules:
        if _supports(config, rule):
            rules.append(rule)
        else:
            logger.warning(f"skipping {rule}: it needs relu units and excitatory_fraction")
    if not rules:
        raise ConfigurationError("no rule in the gallery is supported by this network")
    seeds = gallery.seeds or [config.training.seed]

    os.makedirs(out_dir, exist_ok=True)
    jobs = []
    for seed in seeds:
        for rule in rules:
            job_config = config.with_overrides(training={"rule": rule, "seed": seed})
            name = f"{rule}_seed{seed}"
            jobs.append(
                Job(job_config.get_config_dict(), out_dir, reference, gallery.target_accuracy, True, name)
            )
    results: List[RunResult] = run_jobs(jobs, gallery.n_worker if n_worker is None else n_worker)

    traces: Dict[str, List[TrainingTrace]] = {rule: [] for rule in rules}
    eigenvalues: Dict[str, np.ndarray] = {}
    snapshots: Dict[str, ResponseMatrix] = {}
    for job, result in zip(jobs, results):
        rule = job.config_dict["training"]["rule"]
        traces[rule].append(result.trace)
        if rule not in eigenvalues:
            eigenvalues[rule] = result.eigenvalues
            snapshots[rule] = result.snapshot
            write_eigenvalues(os.path.join(out_dir, f"eig_{rule}.csv"), result.eigenvalues)

    if reference is not None:
        snapshots["reference"] = ResponseMatrix.read_csv(reference)
    labels = list(snapshots)
    distances = np.zeros((len(labels), len(labels)))
    for i, first in enumerate(labels):
        for j in range(i + 1, len(labels)):
            distance = procrustes_distance(snapshots[first], snapshots[labels[j]])
            distances[i, j] = distances[j, i] = distance
    write_pairwise(os.path.join(out_dir, "pairwise.csv"), labels, distances)
    return GalleryResult(traces, eigenvalues, labels, distances)
