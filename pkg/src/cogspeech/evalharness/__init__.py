"""Cross-validation harness, metrics, synthetic fixtures, run manifests."""

from cogspeech.evalharness.experiment import (
    ExperimentConfig,
    LoadedDataset,
    apply_overrides,
    build_speaker_features,
    disfluency_contour,
    fit_fold_scaler,
    load_dataset,
    load_experiment_config,
    parse_experiment_config,
    run_experiment,
    write_atomic,
)
from cogspeech.evalharness.folds import (
    FoldPlan,
    fold_plan_from_json,
    fold_plan_to_json,
    make_folds,
)
from cogspeech.evalharness.metrics import (
    FoldMetrics,
    MetricsReport,
    aggregate,
    compute_metrics,
    parse_report_csv,
    render_report,
)
from cogspeech.evalharness.synth import synth_fixture

__all__ = [
    "ExperimentConfig",
    "LoadedDataset",
    "apply_overrides",
    "build_speaker_features",
    "disfluency_contour",
    "fit_fold_scaler",
    "load_dataset",
    "load_experiment_config",
    "parse_experiment_config",
    "run_experiment",
    "write_atomic",
    "FoldPlan",
    "fold_plan_from_json",
    "fold_plan_to_json",
    "make_folds",
    "FoldMetrics",
    "MetricsReport",
    "aggregate",
    "compute_metrics",
    "parse_report_csv",
    "render_report",
    "synth_fixture",
]
