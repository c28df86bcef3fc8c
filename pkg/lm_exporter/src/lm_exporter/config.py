"""Fine-tuning configuration.

Learning rate, warmup, weight decay, and sequence length default to the
published recipe; epochs and batch size have no published value and must be
given explicitly. The tiny-encoder settings build a small randomly
initialized model with a dataset-derived vocabulary so the whole export path
runs on CPU in seconds (mandatory for CI).
"""
from __future__ import annotations

from dataclasses import dataclass

PRETRAINED_NAMES = ("bert-base-uncased", "nghuyong/ernie-2.0-en")


class ExporterError(Exception):
    pass


@dataclass(frozen=True)
class FinetuneSpec:
    model_id: str                 # id written into the interchange files
    epochs: int                   # required: no published default
    batch_size: int               # required: no published default
    model_name: str = "nghuyong/ernie-2.0-en"
    learning_rate: float = 2e-5
    warmup_steps: int = 50
    weight_decay: float = 0.1
    max_seq_len: int = 256
    n_instances: int = 50
    base_seed: int = 0
    tiny: bool = False            # random-init small encoder, no downloads

    def __post_init__(self):
        if not self.model_id:
            raise ExporterError("model_id is required")
        if self.epochs < 1 or self.batch_size < 1:
            raise ExporterError("epochs and batch_size must be >= 1")
        if self.n_instances < 1:
            raise ExporterError("n_instances must be >= 1")
        if self.max_seq_len < 8:
            raise ExporterError("max_seq_len must be >= 8")
        if not self.tiny and self.model_name not in PRETRAINED_NAMES:
            raise ExporterError(
                f"model_name {self.model_name!r} not one of {PRETRAINED_NAMES} "
                "(use tiny=True for a local random-init encoder)"
            )

    def instance_seed(self, instance_id: int) -> int:
        return (self.base_seed ^ instance_id) & ((1 << 64) - 1)
