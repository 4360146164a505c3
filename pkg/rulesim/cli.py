"""Command line entry point: ``rulesim <command> [options]``."""
from typing import List, Optional
import argparse
import logging
import os
import sys

from .runner import (
    ExperimentConfig,
    GallerySpec,
    SweepSpec,
    ToyConfig,
    Runner,
    load_reference,
    make_surrogate_reference,
    report_from_dir,
    resolve_n_worker,
    resolve_out_dir,
    run_compare,
    run_gain_sweep,
    run_rule_gallery,
    run_toy,
    transform_file,
    write_scores,
)
from .similarity import NoiseFloor, ResponseMatrix, noise_floor
from .util import (
    ConfigHandler,
    ConfigurationError,
    DegenerateInputError,
    IngestionError,
    ShapeError,
    UnsupportedConfigurationError,
)

EXIT_CONFIG = 2
EXIT_INGESTION = 3


def _load_sections(path: Optional[str]) -> dict:
    if path is None:
        return {}
    return ConfigHandler().load_config_dict(path)


def _experiment(args) -> ExperimentConfig:
    sections = _load_sections(args.config)
    config = ExperimentConfig.from_config_dict(sections)
    if getattr(args, "seed", None) is not None:
        config = config.with_overrides(training={"seed": args.seed})
    return config


def cmd_train(args) -> None:
    config = _experiment(args)
    reference = load_reference(config, args.reference)
    runner = Runner(config, resolve_out_dir(args.out), reference)
    trace = runner.run()
    last = trace.rows[-1]
    print(f"trace_{trace.config_hash}.csv: final accuracy {last.normalized_accuracy:.4f}")


def cmd_sweep(args) -> None:
    config = _experiment(args)
    sweep = SweepSpec.from_config_dict(_load_sections(args.config).get("sweep") or {})
    reference = args.reference or config.similarity.reference
    table = run_gain_sweep(
        config, sweep, resolve_out_dir(args.out), reference, resolve_n_worker(args.workers, sweep.n_worker)
    )
    for cell in table.cells:
        status = "unreachable" if cell.unreachable else f"{cell.mean:.4f} +- {cell.std:.4f}"
        print(f"{cell.rule} gain={cell.gain:g} lr={cell.lr:g}: {status}")


def cmd_compare(args) -> None:
    scores = run_compare(
        args.first,
        args.second,
        args.measures.split(","),
        not args.no_center,
        args.subsample,
        args.subsample_seed,
        args.cca_rank,
    )
    if args.out is not None:
        write_scores(args.out, scores)
    for result in scores:
        print(f"{result.measure.value}: {result.value:.10f} ({result.convention.value})")


def cmd_gallery(args) -> None:
    config = _experiment(args)
    gallery = GallerySpec.from_config_dict(_load_sections(args.config).get("gallery") or {})
    if args.rules is not None:
        gallery = GallerySpec.from_config_dict(
            {**gallery.get_config_dict(), "rules": args.rules.split(",")}
        )
    reference = args.reference or config.similarity.reference
    result = run_rule_gallery(
        config, gallery, resolve_out_dir(args.out), reference, resolve_n_worker(args.workers, gallery.n_worker)
    )
    for rule, traces in result.traces.items():
        print(f"{rule}: final accuracy {traces[0].rows[-1].normalized_accuracy:.4f}")


def cmd_toy(args) -> None:
    config_dict = _load_sections(args.config).get("toy") or {}
    overrides = {
        "coeffs": None if args.coeffs is None else [float(c) for c in args.coeffs.split(",")],
        "rule": args.rule,
        "w0": args.w0,
        "tau": args.tau,
        "dt": args.dt,
        "steps": args.steps,
    }
    if args.grid is not None:
        low, high, count = args.grid.split(",")
        count = int(count)
        step = (float(high) - float(low)) / max(count - 1, 1)
        overrides["grid"] = [float(low) + i * step for i in range(count)]
    config_dict.update({key: value for key, value in overrides.items() if value is not None})
    for file_path in run_toy(ToyConfig.from_config_dict(config_dict), resolve_out_dir(args.out)):
        print(file_path)


def cmd_report(args) -> None:
    measures = [m for m in args.measures.split(",") if m]
    for file_path in report_from_dir(resolve_out_dir(args.out), None, measures):
        print(file_path)


def cmd_surrogate(args) -> None:
    config = _experiment(args)
    seed = args.seed if args.seed is not None else config.training.seed + 1000
    responses = make_surrogate_reference(config, seed, args.iterations)
    out = args.out or os.path.join(resolve_out_dir(None), "surrogate.csv")
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    responses.write_csv(out)
    print(out)


def cmd_transform(args) -> None:
    transform_file(args.source, args.target, args.kind, args.seed)
    print(args.target)


def cmd_noise_floor(args) -> None:
    result: NoiseFloor = noise_floor(
        ResponseMatrix.read_csv(args.reference),
        ResponseMatrix.read_csv(args.model),
        args.n_sample,
        args.repeats,
        args.seed,
    )
    for key, value in result.summary().items():
        print(f"{key}: {value:.6f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulesim", description=__doc__)
    parser.add_argument("--log-level", default="INFO", help="root logger level")
    commands = parser.add_subparsers(dest="command", required=True)

    def experiment_parser(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", help="YAML configuration file")
        sub.add_argument("--seed", type=int, help="overrides training.seed")
        sub.add_argument("--reference", help="reference ResponseMatrix CSV")
        sub.add_argument("--out", help="output directory (or RULESIM_OUT_DIR)")
        sub.set_defaults(handler=handler)
        return sub

    experiment_parser("train", cmd_train, "train one network")
    sweep = experiment_parser("sweep", cmd_sweep, "gain x learning-rate x rule sweep")
    sweep.add_argument("--workers", type=int, help="worker processes (or RULESIM_N_WORKER)")
    gallery = experiment_parser("gallery", cmd_gallery, "train every rule from one initialization")
    gallery.add_argument("--workers", type=int)
    gallery.add_argument("--rules", help="comma separated rule tags")
    surrogate = experiment_parser("surrogate", cmd_surrogate, "write a surrogate reference file")
    surrogate.add_argument("--iterations", type=int)

    compare = commands.add_parser("compare", help="similarity of two response files")
    compare.add_argument("first")
    compare.add_argument("second")
    compare.add_argument("--measures", default="procrustes,cka,cca")
    compare.add_argument("--no-center", action="store_true")
    compare.add_argument("--subsample", type=int)
    compare.add_argument("--subsample-seed", type=int, default=0)
    compare.add_argument("--cca-rank", type=int, default=20)
    compare.add_argument("--out", help="CSV file for the scores")
    compare.set_defaults(handler=cmd_compare)

    toy = commands.add_parser("toy", help="1-D linear RNN flows")
    toy.add_argument("--config")
    toy.add_argument("--coeffs", help="x_1,...,x_T")
    toy.add_argument("--rule", choices=["bptt", "eprop"])
    toy.add_argument("--w0", type=float)
    toy.add_argument("--grid", help="low,high,count of initial W values")
    toy.add_argument("--tau", type=float)
    toy.add_argument("--dt", type=float)
    toy.add_argument("--steps", type=int)
    toy.add_argument("--out")
    toy.set_defaults(handler=cmd_toy)

    report = commands.add_parser("report", help="CSV and SVG report from a results directory")
    report.add_argument("--out")
    report.add_argument("--measures", default="procrustes")
    report.set_defaults(handler=cmd_report)

    transform = commands.add_parser("transform", help="rotate or permute the units of a response file")
    transform.add_argument("source")
    transform.add_argument("target")
    transform.add_argument("--kind", choices=["rotate", "permute"], default="rotate")
    transform.add_argument("--seed", type=int, default=0)
    transform.set_defaults(handler=cmd_transform)

    floor = commands.add_parser("noise-floor", help="data-data vs model-data distances")
    floor.add_argument("reference")
    floor.add_argument("model")
    floor.add_argument("--n-sample", type=int, required=True)
    floor.add_argument("--repeats", type=int, default=20)
    floor.add_argument("--seed", type=int, default=0)
    floor.set_defaults(handler=cmd_noise_floor)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    logger = logging.getLogger(__name__)
    try:
        args.handler(args)
    except (ConfigurationError, UnsupportedConfigurationError) as error:
        logger.error(f"configuration error: {error}")
        return EXIT_CONFIG
    except (IngestionError, ShapeError, DegenerateInputError) as error:
        logger.error(f"input error: {error}")
        return EXIT_INGESTION
    return 0


if __name__ == "__main__":
    sys.exit(main())
