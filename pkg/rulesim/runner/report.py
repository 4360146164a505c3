from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple
import csv
import glob
import logging
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..util import ConfigurationError  # noqa: E402
from .gallery import read_eigenvalues  # noqa: E402
from .trace import TrainingTrace, format_value  # noqa: E402

plt.rcParams["svg.hashsalt"] = "rulesim"
SVG_METADATA = {"Date": None}

SeriesKey = Tuple[str, str, float, float]


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray([v for v in values if v is not None and not np.isnan(v)], dtype=np.float64)
    if values.size == 0:
        return float("nan"), float("nan")
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1))


def aggregate_curves(
    traces: Sequence[TrainingTrace], measures: Sequence[str]
) -> Dict[SeriesKey, List[dict]]:
    """Seed mean and sample std per (task, rule, gain, lr) and iteration."""
    grouped: Dict[SeriesKey, Dict[int, list]] = defaultdict(lambda: defaultdict(list))
    for trace in traces:
        for row in trace.rows:
            grouped[(row.task, row.rule, row.gain, row.lr)][row.iteration].append(row)

    curves = {}
    for key in sorted(grouped):
        points = []
        for iteration in sorted(grouped[key]):
            rows = grouped[key][iteration]
            point = {"iteration": iteration, "n_seeds": len(rows)}
            point["accuracy_mean"], point["accuracy_std"] = _mean_std(
                [row.normalized_accuracy for row in rows]
            )
            for measure in measures:
                values = [getattr(row, measure) for row in rows]
                point[f"{measure}_mean"], point[f"{measure}_std"] = _mean_std(values)
            points.append(point)
        curves[key] = points
    return curves


def _write_curves(
    file_path: str, curves: Dict[SeriesKey, List[dict]], measures: Sequence[str]
) -> None:
    columns = ["task", "rule", "gain", "lr", "iteration", "n_seeds", "accuracy_mean", "accuracy_std"]
    for measure in measures:
        columns += [f"{measure}_mean", f"{measure}_std"]
    with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow(columns)
        for (task, rule, gain, lr), points in curves.items():
            for point in points:
                values = [task, rule, gain, lr] + [point[name] for name in columns[4:]]
                writer.writerow([format_value(value) for value in values])


def _plot_distance_curves(
    file_path: str, task: str, curves: Dict[SeriesKey, List[dict]], measure: str
) -> bool:
    fig, ax = plt.subplots(figsize=(6, 4))
    plotted = False
    for (series_task, rule, gain, lr), points in curves.items():
        if series_task != task:
            continue
        x = np.array([p["accuracy_mean"] for p in points])
        y = np.array([p[f"{measure}_mean"] for p in points])
        keep = ~np.isnan(y)
        if not keep.any():
            continue
        ax.errorbar(
            x[keep],
            y[keep],
            xerr=np.array([p["accuracy_std"] for p in points])[keep],
            yerr=np.array([p[f"{measure}_std"] for p in points])[keep],
            fmt="-o",
            markersize=3,
            capsize=2,
            label=f"{rule} g={gain:g} lr={lr:g}",
        )
        plotted = True
    if plotted:
        ax.set_xlim(0, 1)
        ax.set_xlabel("normalized accuracy")
        ax.set_ylabel(f"{measure} to reference")
        ax.set_title(task)
        ax.legend(fontsize="small")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(file_path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return plotted


def _plot_sweep(file_path: str, sweep_rows: List[dict]) -> None:
    rows = [row for row in sweep_rows if row.get("mean") not in (None, "")]
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(rows) + 2), 4))
    labels = [f"{row['rule']}\ng={float(row['gain']):g}\nlr={float(row['lr']):g}" for row in rows]
    means = [float(row["mean"]) for row in rows]
    stds = [float(row["std"]) if row.get("std") not in (None, "") else 0.0 for row in rows]
    ax.bar(np.arange(len(rows)), means, yerr=stds, capsize=3, color="tab:blue", alpha=0.8)
    ax.set_xticks(np.arange(len(rows)))
    ax.set_xticklabels(labels, fontsize="x-small")
    ax.set_ylabel("distance at target accuracy")
    fig.tight_layout()
    fig.savefig(file_path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)


def _plot_eigenvalues(file_path: str, eigenvalues: Dict[str, np.ndarray]) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    for rule, values in sorted(eigenvalues.items()):
        ax.scatter(values.real, values.imag, s=6, alpha=0.6, label=rule)
    circle = np.linspace(0, 2 * np.pi, 200)
    ax.plot(np.cos(circle), np.sin(circle), color="gray", linewidth=0.8, linestyle="--")
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(file_path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)


def emit_report(
    traces: Sequence[TrainingTrace],
    out_dir: str,
    measures: Sequence[str] = ("procrustes",),
    sweep_rows: Optional[List[dict]] = None,
    eigenvalues: Optional[Dict[str, np.ndarray]] = None,
) -> List[str]:
    """Write ``curves.csv`` and, unless ``measures`` is empty, the SVG figures."""
    logger = logging.getLogger(__name__)
    if not traces:
        raise ConfigurationError("a report needs at least one trace")
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as error:
        raise ConfigurationError(f"cannot write the report to {out_dir}: {error}")
    if not os.access(out_dir, os.W_OK):
        raise ConfigurationError(f"cannot write the report to {out_dir}")

    curves = aggregate_curves(traces, measures)
    written = [os.path.join(out_dir, "curves.csv")]
    _write_curves(written[0], curves, measures)
    if not measures:
        return written

    for task in sorted({key[0] for key in curves}):
        for measure in measures:
            file_path = os.path.join(out_dir, f"{measure}_{task}.svg")
            if _plot_distance_curves(file_path, task, curves, measure):
                written.append(file_path)
    if sweep_rows:
        file_path = os.path.join(out_dir, "sweep.svg")
        _plot_sweep(file_path, sweep_rows)
        written.append(file_path)
    if eigenvalues:
        file_path = os.path.join(out_dir, "eigenvalues.svg")
        _plot_eigenvalues(file_path, eigenvalues)
        written.append(file_path)
    logger.info(f"report: wrote {len(written)} files to {out_dir}")
    return written


def read_sweep_rows(file_path: str) -> List[dict]:
    with open(file_path, "r", newline="", encoding="utf-8") as csvfile:
        lines = [line for line in csvfile if not line.startswith("#")]
    return list(csv.DictReader(lines))


def report_from_dir(
    results_dir: str, out_dir: Optional[str] = None, measures: Sequence[str] = ("procrustes",)
) -> List[str]:
    """Rebuild the report from the CSV files a train, sweep or gallery run left behind."""
    trace_files = sorted(glob.glob(os.path.join(results_dir, "trace_*.csv")))
    traces = [TrainingTrace.read_csv(path) for path in trace_files]
    sweep_file = os.path.join(results_dir, "sweep.csv")
    sweep_rows = read_sweep_rows(sweep_file) if os.path.isfile(sweep_file) else None
    eigenvalues = {
        os.path.basename(path)[len("eig_") : -len(".csv")]: read_eigenvalues(path)
        for path in sorted(glob.glob(os.path.join(results_dir, "eig_*.csv")))
    }
    return emit_report(traces, out_dir or results_dir, measures, sweep_rows, eigenvalues or None)
