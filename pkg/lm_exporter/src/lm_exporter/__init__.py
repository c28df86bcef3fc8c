"""Per-fold encoder fine-tuning with JSONL prediction/embedding export."""

__version__ = "0.1.0"

from lm_exporter.config import ExporterError, FinetuneSpec
from lm_exporter.data import FoldPlan, SpeakerDataset, load_dataset, load_fold_plan
from lm_exporter.export import export_only, finetune_and_export

__all__ = [
    "ExporterError",
    "FinetuneSpec",
    "FoldPlan",
    "SpeakerDataset",
    "load_dataset",
    "load_fold_plan",
    "export_only",
    "finetune_and_export",
]
