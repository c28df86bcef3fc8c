"""Seeded stratified k-fold assignment of speakers."""
from __future__ import annotations

import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from cogspeech.errors import ValidationError


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignments: Mapping[str, int]

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError(f"k = {self.k} must be >= 2")
        bad = {s: f for s, f in self.assignments.items() if not 0 <= f < self.k}
        if bad:
            raise ValidationError(f"fold indices out of range: {bad}")

    def fold_of(self, speaker: str) -> int:
        return self.assignments[speaker]

    def speakers_in(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f == fold)

    def train_speakers(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f != fold)


def make_folds(labels: Mapping[str, int], k: int = 5, seed: int = 0) -> FoldPlan:
    """Within each class: seeded shuffle, then round-robin over folds.

    Guarantees per-fold class counts within one of perfect stratification.
    """
    by_class: dict[int, list[str]] = {}
    for speaker in sorted(labels):
        by_class.setdefault(labels[speaker], []).append(speaker)
    for cls, members in sorted(by_class.items()):
        if len(members) < k:
            raise ValidationError(
                f"class {cls} has only {len(members)} speakers, fewer than k = {k}"
            )
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    for cls in sorted(by_class):
        members = by_class[cls]
        order = rng.permutation(len(members))
        for position, member_index in enumerate(order):
            assignments[members[member_index]] = position % k
    return FoldPlan(k=k, seed=seed, assignments=MappingProxyType(assignments))


def fold_plan_to_json(plan: FoldPlan) -> bytes:
    payload = {"k": plan.k, "seed": plan.seed, "assignments": dict(sorted(plan.assignments.items()))}
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def fold_plan_from_json(data: bytes) -> FoldPlan:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"fold plan is not valid JSON: {exc}")
    if not isinstance(obj, dict) or set(obj) != {"k", "seed", "assignments"}:
        raise ValidationError("fold plan must have keys k, seed, assignments")
    return FoldPlan(
        k=int(obj["k"]),
        seed=int(obj["seed"]),
        assignments=MappingProxyType({str(s): int(f) for s, f in obj["assignments"].items()}),
    )
