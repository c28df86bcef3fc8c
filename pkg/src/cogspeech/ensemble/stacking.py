"""Two-stage stacking: out-of-fold base predictions feed a meta classifier.

Stage 1 trains each internal logistic base per fold on the other folds and
predicts the held-out fold; external models deliver their out-of-fold
predictions through the JSONL interchange, tagged with the fold whose
training split excluded the speaker. Stage 2 concatenates one probability
pair per base model (8 features for the default four bases) and fits a
logistic meta model on every speaker's out-of-fold row.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from cogspeech.errors import ValidationError
from cogspeech.ensemble.external import ExternalPredictions
from cogspeech.nn.logistic import (
    LogisticModel,
    logistic_fit,
    logistic_predict,
)

if TYPE_CHECKING:  # imported lazily to keep ensemble independent of the harness
    from cogspeech.evalharness.folds import FoldPlan

DEFAULT_MODEL_ORDER = ("lr_comp", "lr_disfl", "ernie", "bert")


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    sd: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        sd = X.std(axis=0)
        sd = np.where(sd == 0.0, 1.0, sd)
        return cls(mean=X.mean(axis=0), sd=sd)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.sd


@dataclass(frozen=True)
class ProvenanceRow:
    """Which fold's stage-1 model produced a speaker's out-of-fold probs."""

    speaker_id: str
    model_id: str
    fold: int


@dataclass
class StackArtifacts:
    plan: FoldPlan
    model_order: tuple[str, ...]
    oof: dict[tuple[str, str], tuple[float, float]]
    fold_models: dict[tuple[str, int], tuple[Scaler, LogisticModel]]
    train_speakers: dict[tuple[str, int], frozenset[str]]
    provenance: tuple[ProvenanceRow, ...]


def external_oof(
    predictions: ExternalPredictions, model_id: str, plan: FoldPlan
) -> dict[str, tuple[float, float]]:
    """Mean out-of-fold probability pair per speaker for one external model.

    Every fold-tagged row must carry the speaker's own fold; anything else is
    a contaminated prediction and is rejected outright.
    """
    rows = predictions.for_model(model_id)
    if not rows:
        raise ValidationError(f"no external predictions for model {model_id!r}")
    grouped: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        if r.fold is None:
            continue
        expected = plan.assignments.get(r.speaker_id)
        if expected is None:
            raise ValidationError(
                f"external prediction for unknown speaker {r.speaker_id!r}"
            )
        if r.fold != expected:
            raise ValidationError(
                f"contaminated prediction: model {model_id!r} instance "
                f"{r.instance_id} predicts speaker {r.speaker_id!r} with fold "
                f"{r.fold}, but the speaker belongs to fold {expected}"
            )
        grouped.setdefault(r.speaker_id, []).append(r.probs)
    missing = sorted(set(plan.assignments) - set(grouped))
    if missing:
        raise ValidationError(
            f"model {model_id!r} lacks out-of-fold predictions for speakers {missing}"
        )
    return {speaker: _mean_probs(pairs) for speaker, pairs in grouped.items()}


def _mean_probs(pairs: list[tuple[float, float]]) -> tuple[float, float]:
    cn = sum(p[0] for p in pairs) / len(pairs)
    ad = sum(p[1] for p in pairs) / len(pairs)
    return (cn, ad)


def stack_fit(
    internal_features: dict[str, dict[str, np.ndarray]],
    labels: dict[str, int],
    plan: FoldPlan,
    external_predictions: ExternalPredictions,
    external_ids: tuple[str, ...] = ("ernie", "bert"),
    model_order: tuple[str, ...] | None = None,
    lr_l2: float = 0.01,
    meta_l2: float = 0.01,
) -> tuple[LogisticModel, StackArtifacts]:
    """Run both stacking stages; returns the meta model and stage-1 artifacts.

    internal_features maps model_id -> speaker -> aggregate feature vector.
    """
    if model_order is None:
        model_order = tuple(internal_features) + tuple(external_ids)
    speakers = sorted(plan.assignments)
    missing_labels = [s for s in speakers if s not in labels]
    if missing_labels:
        raise ValidationError(f"no labels for speakers {missing_labels}")

    oof: dict[tuple[str, str], tuple[float, float]] = {}
    fold_models: dict[tuple[str, int], tuple[Scaler, LogisticModel]] = {}
    train_speakers: dict[tuple[str, int], frozenset[str]] = {}
    provenance: list[ProvenanceRow] = []

    for model_id, features in internal_features.items():
        missing = sorted(set(speakers) - set(features))
        if missing:
            raise ValidationError(
                f"internal model {model_id!r} lacks features for speakers {missing}"
            )
        for fold in range(plan.k):
            train = sorted(plan.train_speakers(fold))
            heldout = sorted(plan.speakers_in(fold))
            X_train = np.array([features[s] for s in train])
            y_train = np.array([labels[s] for s in train])
            scaler = Scaler.fit(X_train)
            model = logistic_fit(scaler.transform(X_train), y_train, l2=lr_l2)
            fold_models[(model_id, fold)] = (scaler, model)
            train_speakers[(model_id, fold)] = frozenset(train)
            for s in heldout:
                probs = logistic_predict(model, scaler.transform(features[s][None, :])[0])
                oof[(model_id, s)] = (float(probs[0]), float(probs[1]))
                provenance.append(ProvenanceRow(speaker_id=s, model_id=model_id, fold=fold))

    for model_id in external_ids:
        per_speaker = external_oof(external_predictions, model_id, plan)
        for s in speakers:
            oof[(model_id, s)] = per_speaker[s]
            provenance.append(
                ProvenanceRow(speaker_id=s, model_id=model_id, fold=plan.assignments[s])
            )
        train_speakers.update(
            {
                (model_id, fold): frozenset(plan.train_speakers(fold))
                for fold in range(plan.k)
            }
        )

    artifacts = StackArtifacts(
        plan=plan,
        model_order=model_order,
        oof=oof,
        fold_models=fold_models,
        train_speakers=train_speakers,
        provenance=tuple(provenance),
    )
    X_meta = np.array([meta_features(artifacts, s) for s in speakers])
    y_meta = np.array([labels[s] for s in speakers])
    meta = logistic_fit(X_meta, y_meta, l2=meta_l2)
    return meta, artifacts


def meta_features(artifacts: StackArtifacts, speaker: str) -> np.ndarray:
    """Concatenated out-of-fold probability pairs in model order."""
    parts = []
    for model_id in artifacts.model_order:
        try:
            parts.extend(artifacts.oof[(model_id, speaker)])
        except KeyError:
            raise ValidationError(
                f"speaker {speaker!r} has no out-of-fold prediction from {model_id!r}"
            )
    return np.array(parts)


def stack_meta_cv(
    artifacts: StackArtifacts,
    labels: dict[str, int],
    meta_l2: float = 0.01,
) -> dict[str, tuple[int, tuple[float, float]]]:
    """Fold-held-out meta predictions for fair CV reporting.

    The meta model for fold f trains only on out-of-fold rows of speakers
    outside f, so no stage-2 evaluation row was seen during meta training.
    """
    plan = artifacts.plan
    out: dict[str, tuple[int, tuple[float, float]]] = {}
    for fold in range(plan.k):
        train = sorted(plan.train_speakers(fold))
        test = sorted(plan.speakers_in(fold))
        X = np.array([meta_features(artifacts, s) for s in train])
        y = np.array([labels[s] for s in train])
        meta = logistic_fit(X, y, l2=meta_l2)
        for s in test:
            probs = logistic_predict(meta, meta_features(artifacts, s))
            label = 0 if probs[0] >= probs[1] else 1
            out[s] = (label, (float(probs[0]), float(probs[1])))
    return out


def stack_predict(
    artifacts: StackArtifacts,
    meta: LogisticModel,
    internal_test_features: dict[str, dict[str, np.ndarray]],
    external_test: ExternalPredictions,
    speakers: list[str],
) -> dict[str, tuple[int, tuple[float, float]]]:
    """Inference on unseen speakers: average stage-1 instances per model,
    concatenate the means, and let the meta model decide."""
    internal_ids = {mid for (mid, _) in artifacts.fold_models}
    out: dict[str, tuple[int, tuple[float, float]]] = {}
    for s in speakers:
        parts: list[float] = []
        for model_id in artifacts.model_order:
            if model_id in internal_ids:
                features = internal_test_features.get(model_id, {})
                if s not in features:
                    raise ValidationError(
                        f"no {model_id!r} features for test speaker {s!r}"
                    )
                pairs = []
                for fold in range(artifacts.plan.k):
                    scaler, model = artifacts.fold_models[(model_id, fold)]
                    probs = logistic_predict(
                        model, scaler.transform(features[s][None, :])[0]
                    )
                    pairs.append((float(probs[0]), float(probs[1])))
            else:
                rows = external_test.for_speaker(model_id, s)
                if not rows:
                    raise ValidationError(
                        f"no external test predictions from {model_id!r} for "
                        f"speaker {s!r}"
                    )
                pairs = [r.probs for r in rows]
            parts.extend(_mean_probs(pairs))
        probs = logistic_predict(meta, np.array(parts))
        label = 0 if probs[0] >= probs[1] else 1
        out[s] = (label, (float(probs[0]), float(probs[1])))
    return out


def audit_out_of_fold(artifacts: StackArtifacts) -> list[str]:
    """Every stage-2 training row must come from a model that never saw the
    speaker; returns human-readable violations (empty = clean)."""
    violations = []
    for row in artifacts.provenance:
        expected = artifacts.plan.assignments[row.speaker_id]
        if row.fold != expected:
            violations.append(
                f"{row.model_id}/{row.speaker_id}: produced by fold {row.fold}, "
                f"speaker belongs to fold {expected}"
            )
        trained_on = artifacts.train_speakers.get((row.model_id, row.fold))
        if trained_on is not None and row.speaker_id in trained_on:
            violations.append(
                f"{row.model_id}/{row.speaker_id}: stage-1 model for fold "
                f"{row.fold} was trained on this speaker"
            )
    return violations
