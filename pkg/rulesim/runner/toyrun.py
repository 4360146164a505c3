from typing import List
import csv
import logging
import os

from ..toy import (
    FlowRule,
    ToyProblem,
    Verdict,
    basin_scan,
    eprop_jacobian,
    integrate_flow,
    poly_readout,
)
from .config import ToyConfig
from .trace import format_value


def run_toy(config: ToyConfig, out_dir: str) -> List[str]:
    """Integrate one flow (or scan a W0 grid) and write the CSV outputs."""
    logger = logging.getLogger(__name__)
    os.makedirs(out_dir, exist_ok=True)
    problem = ToyProblem(tuple(config.coeffs), config.tau)
    rule = FlowRule(config.rule)
    tolerances = dict(
        dt=config.dt,
        steps=config.steps,
        output_tol=config.output_tol,
        step_tol=config.step_tol,
        divergence_threshold=config.divergence_threshold,
    )

    if config.grid is not None:
        scan = basin_scan(problem, rule, config.grid, **tolerances)
        file_path = os.path.join(out_dir, "toy_basin.csv")
        with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow(["w0", "verdict", "w_end"])
            for w0, verdict, w_end in zip(scan.w0, scan.verdicts, scan.w_end):
                writer.writerow([format_value(float(w0)), verdict.value, format_value(float(w_end))])
        logger.info(f"basin scan: {scan.summary()}")
        return [file_path]

    result = integrate_flow(problem, config.w0, rule, **tolerances)
    trajectory_file = os.path.join(out_dir, "toy_trajectory.csv")
    values, _ = poly_readout(problem, result.trajectory)
    with open(trajectory_file, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow(["step", "w", "y_hat"])
        for step, (w, value) in enumerate(zip(result.trajectory, values)):
            writer.writerow([step, format_value(float(w)), format_value(float(value))])

    summary_file = os.path.join(out_dir, "toy_summary.csv")
    jacobian = None
    if result.verdict == Verdict.CONVERGED and rule == FlowRule.EPROP:
        jacobian = float(eprop_jacobian(problem, result.w_end))
    with open(summary_file, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile, lineterminator="\n")
        writer.writerow(["rule", "w0", "verdict", "w_end", "steps", "root", "jacobian"])
        writer.writerow(
            [format_value(value) for value in [rule.value, float(config.w0), result.verdict.value]]
            + [format_value(result.w_end), result.steps, format_value(result.root), format_value(jacobian)]
        )
    logger.info(f"{rule.value} flow from W0={config.w0}: {result.verdict.value} at W={result.w_end:.6g}")
    return [trajectory_file, summary_file]
