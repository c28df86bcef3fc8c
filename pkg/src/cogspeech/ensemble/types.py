"""Interchange types shared by all three ensemble architectures."""
from __future__ import annotations

import math
from dataclasses import dataclass

from cogspeech.errors import ValidationError

PROB_SUM_TOL = 1e-6
_UINT64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class PredictionVector:
    """One model instance's class-probability pair for one speaker."""

    speaker_id: str
    model_id: str
    instance_id: int
    probs: tuple[float, float]
    fold: int | None = None

    def __post_init__(self):
        if self.instance_id < 0:
            raise ValidationError("instance_id must be >= 0")
        if len(self.probs) != 2:
            raise ValidationError("probs must be a 2-vector")
        if any(p < 0 or not math.isfinite(p) for p in self.probs):
            raise ValidationError(f"probs {self.probs} must be finite and non-negative")
        if abs(sum(self.probs) - 1.0) > PROB_SUM_TOL:
            raise ValidationError(
                f"probs {self.probs} sum to {sum(self.probs)}, off the simplex"
            )

    @property
    def hard_label(self) -> int:
        """Argmax label; an exact tie goes to class 0 (CN)."""
        return 0 if self.probs[0] >= self.probs[1] else 1


@dataclass(frozen=True)
class ExternalEmbedding:
    speaker_id: str
    model_id: str
    vector: tuple[float, ...]

    def __post_init__(self):
        if not self.vector:
            raise ValidationError("embedding vector is empty")
        if any(not math.isfinite(v) for v in self.vector):
            raise ValidationError(
                f"embedding for {self.speaker_id!r} contains non-finite values"
            )


@dataclass(frozen=True)
class BagSpec:
    """How many independently seeded instances to train, and from which seed."""

    n_instances: int = 50
    base_seed: int = 0

    def __post_init__(self):
        if self.n_instances < 1:
            raise ValidationError("n_instances must be >= 1")
        if not 0 <= self.base_seed <= _UINT64_MASK:
            raise ValidationError("base_seed must fit in 64 unsigned bits")

    def instance_seed(self, instance_id: int) -> int:
        return (self.base_seed ^ instance_id) & _UINT64_MASK
