from .config import (
    ExperimentConfig,
    SimilarityConfig,
    ToyConfig,
    TrainingConfig,
    resolve_n_worker,
    resolve_out_dir,
)
from .trace import TraceRow, TrainingTrace, interpolate_at_accuracy
from .runner import Runner, RunResult, final_params, load_reference, run_training
from .sweep import SweepCell, SweepSpec, SweepTable, run_gain_sweep, run_jobs, summarize_sweep
from .gallery import GalleryResult, GallerySpec, run_rule_gallery
from .compare import run_compare, transform_file, write_scores
from .surrogate import make_surrogate_reference, noisy_trials, trial_averaging_curve
from .report import emit_report, report_from_dir
from .toyrun import run_toy
