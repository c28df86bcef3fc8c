"""Readers and writers for the prediction/embedding JSONL interchange files.

These files are the boundary with externally fine-tuned language models:
the exporter writes them, this module validates and indexes them.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from cogspeech.errors import ParseError, ValidationError
from cogspeech.ensemble.types import PROB_SUM_TOL, ExternalEmbedding, PredictionVector


@dataclass(frozen=True)
class ExternalPredictions:
    """Predictions indexed by (model_id, instance_id, speaker_id)."""

    records: tuple[PredictionVector, ...]

    def model_ids(self) -> list[str]:
        return sorted({r.model_id for r in self.records})

    def for_model(self, model_id: str) -> list[PredictionVector]:
        return [r for r in self.records if r.model_id == model_id]

    def for_speaker(self, model_id: str, speaker_id: str) -> list[PredictionVector]:
        return [
            r for r in self.records
            if r.model_id == model_id and r.speaker_id == speaker_id
        ]

    def __len__(self) -> int:
        return len(self.records)


_PRED_KEYS = {"speaker_id", "model_id", "instance_id", "fold", "probs"}
_EMB_KEYS = {"speaker_id", "model_id", "vector"}


def read_external_predictions(data: bytes) -> ExternalPredictions:
    """Parse predictions JSONL with prob-simplex and duplicate-key validation."""
    records: list[PredictionVector] = []
    seen: set[tuple[str, int, str]] = set()
    for line_no, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=line_no)
        if not isinstance(obj, dict) or set(obj) != _PRED_KEYS:
            raise ValidationError(
                f"line {line_no}: prediction object must have keys {sorted(_PRED_KEYS)}"
            )
        probs = obj["probs"]
        if (
            not isinstance(probs, list)
            or len(probs) != 2
            or not all(isinstance(p, (int, float)) and math.isfinite(p) for p in probs)
        ):
            raise ValidationError(f"line {line_no}: probs must be two finite numbers")
        if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
            raise ValidationError(
                f"line {line_no}: probs sum to {sum(probs):.8f}, off the simplex"
            )
        fold = obj["fold"]
        if fold is not None and not isinstance(fold, int):
            raise ValidationError(f"line {line_no}: fold must be an integer or null")
        key = (obj["model_id"], obj["instance_id"], obj["speaker_id"])
        if key in seen:
            raise ValidationError(
                f"line {line_no}: duplicate prediction key "
                f"(model={key[0]!r}, instance={key[1]}, speaker={key[2]!r})"
            )
        seen.add(key)
        try:
            records.append(
                PredictionVector(
                    speaker_id=obj["speaker_id"],
                    model_id=obj["model_id"],
                    instance_id=obj["instance_id"],
                    probs=(float(probs[0]), float(probs[1])),
                    fold=fold,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from exc
    return ExternalPredictions(records=tuple(records))


def read_external_embeddings(data: bytes) -> dict[tuple[str, str], ExternalEmbedding]:
    """Parse embeddings JSONL; dimension must be constant per model_id."""
    out: dict[tuple[str, str], ExternalEmbedding] = {}
    dims: dict[str, int] = {}
    for line_no, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", line=line_no)
        if not isinstance(obj, dict) or set(obj) != _EMB_KEYS:
            raise ValidationError(
                f"line {line_no}: embedding object must have keys {sorted(_EMB_KEYS)}"
            )
        vector = obj["vector"]
        if not isinstance(vector, list) or not vector:
            raise ValidationError(f"line {line_no}: vector must be a non-empty list")
        model_id = obj["model_id"]
        if model_id in dims and dims[model_id] != len(vector):
            raise ValidationError(
                f"line {line_no}: embedding dimension {len(vector)} for model "
                f"{model_id!r} conflicts with earlier dimension {dims[model_id]}"
            )
        dims[model_id] = len(vector)
        key = (model_id, obj["speaker_id"])
        if key in out:
            raise ValidationError(
                f"line {line_no}: duplicate embedding key "
                f"(model={key[0]!r}, speaker={key[1]!r})"
            )
        try:
            out[key] = ExternalEmbedding(
                speaker_id=obj["speaker_id"],
                model_id=model_id,
                vector=tuple(float(v) for v in vector),
            )
        except ValidationError as exc:
            raise ValidationError(f"line {line_no}: {exc}") from exc
    return out


def embeddings_by_speaker(
    embeddings: dict[tuple[str, str], ExternalEmbedding], model_id: str
) -> dict[str, np.ndarray]:
    return {
        speaker: np.asarray(emb.vector, dtype=np.float64)
        for (mid, speaker), emb in embeddings.items()
        if mid == model_id
    }


def predictions_to_jsonl(records) -> bytes:
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "speaker_id": r.speaker_id,
                    "model_id": r.model_id,
                    "instance_id": r.instance_id,
                    "fold": r.fold,
                    "probs": [r.probs[0], r.probs[1]],
                },
                sort_keys=True,
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def embeddings_to_jsonl(embeddings) -> bytes:
    lines = []
    for e in embeddings:
        lines.append(
            json.dumps(
                {
                    "speaker_id": e.speaker_id,
                    "model_id": e.model_id,
                    "vector": list(e.vector),
                },
                sort_keys=True,
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
