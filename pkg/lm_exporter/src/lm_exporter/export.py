"""Per-fold fine-tuning and JSONL export in the cogspeech interchange formats.

Out-of-fold discipline: an exported prediction for speaker s always carries
the fold whose training split excluded s; each speaker's embedding likewise
comes from a model fine-tuned without that speaker.
"""
from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path

from lm_exporter.config import ExporterError, FinetuneSpec
from lm_exporter.data import FoldPlan, SpeakerDataset
from lm_exporter.modeling import (
    build_model_and_tokenizer,
    finetune,
    pooled_embeddings,
    predict_probs,
    was_truncated,
)

PROB_SUM_TOL = 1e-6


def validate_prediction_row(row: dict, line_no: int) -> None:
    if set(row) != {"speaker_id", "model_id", "instance_id", "fold", "probs"}:
        raise ExporterError(f"line {line_no}: bad prediction keys {sorted(row)}")
    probs = row["probs"]
    if len(probs) != 2 or any(not math.isfinite(p) or p < 0 for p in probs):
        raise ExporterError(f"line {line_no}: bad probs {probs}")
    if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
        raise ExporterError(f"line {line_no}: probs sum {sum(probs)} off the simplex")


def validate_embedding_row(row: dict, line_no: int, dim: int | None) -> int:
    if set(row) != {"speaker_id", "model_id", "vector"}:
        raise ExporterError(f"line {line_no}: bad embedding keys {sorted(row)}")
    vector = row["vector"]
    if not vector or any(not math.isfinite(v) for v in vector):
        raise ExporterError(f"line {line_no}: bad vector")
    if dim is not None and len(vector) != dim:
        raise ExporterError(f"line {line_no}: inconsistent dimension {len(vector)}")
    return len(vector)


def _write_validated_jsonl(path: Path, rows: list[dict], kind: str) -> None:
    dim = None
    for i, row in enumerate(rows, start=1):
        if kind == "predictions":
            validate_prediction_row(row, i)
        else:
            dim = validate_embedding_row(row, i, dim)
    payload = "\n".join(json.dumps(r, sort_keys=True) for r in rows) + "\n"
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(payload)
    tmp.replace(path)


def finetune_and_export(
    dataset: SpeakerDataset,
    spec: FinetuneSpec,
    plan: FoldPlan,
    out_dir: Path,
    checkpoint_dir: Path | None = None,
) -> tuple[Path, Path]:
    """Fine-tune per fold and instance; write predictions and embeddings.

    Returns (predictions_path, embeddings_path). Prediction rows carry the
    held-out fold index; embeddings come from the instance-0 model of each
    speaker's own fold (trained without the speaker).
    """
    out_dir = Path(out_dir)
    speakers = sorted(plan.assignments)
    missing = sorted(set(speakers) - set(dataset.texts))
    if missing:
        raise ExporterError(f"fold plan references unknown speakers {missing}")

    work_dir = Path(tempfile.mkdtemp(prefix="lm_exporter_"))
    prediction_rows: list[dict] = []
    embedding_rows: list[dict] = []
    truncated: list[str] = []

    for fold in range(plan.k):
        train = plan.train_speakers(fold)
        heldout = plan.speakers_in(fold)
        train_texts = [dataset.texts[s] for s in train]
        train_labels = [dataset.labels[s] for s in train]
        heldout_texts = [dataset.texts[s] for s in heldout]

        for instance in range(spec.n_instances):
            seed = spec.instance_seed(instance) + fold * 1_000_003
            model, tokenizer = build_model_and_tokenizer(
                spec, list(dataset.texts.values()), work_dir
            )
            model = finetune(model, tokenizer, train_texts, train_labels, spec, seed)
            probs = predict_probs(model, tokenizer, heldout_texts, spec.max_seq_len)
            for s, p in zip(heldout, probs):
                prediction_rows.append(
                    {
                        "speaker_id": s,
                        "model_id": spec.model_id,
                        "instance_id": instance,
                        "fold": fold,
                        "probs": [float(p[0]), float(p[1])],
                    }
                )
            if instance == 0:
                vectors = pooled_embeddings(model, tokenizer, heldout_texts, spec.max_seq_len)
                for s, vec in zip(heldout, vectors):
                    embedding_rows.append(
                        {
                            "speaker_id": s,
                            "model_id": spec.model_id,
                            "vector": [float(v) for v in vec],
                        }
                    )
                for s in heldout:
                    if was_truncated(tokenizer, dataset.texts[s], spec.max_seq_len):
                        truncated.append(s)
                if checkpoint_dir is not None:
                    target = Path(checkpoint_dir) / f"fold_{fold}"
                    model.save_pretrained(target)
                    tokenizer.save_pretrained(target)

    prediction_rows.sort(key=lambda r: (r["model_id"], r["instance_id"], r["speaker_id"]))
    embedding_rows.sort(key=lambda r: (r["model_id"], r["speaker_id"]))

    predictions_path = out_dir / f"{spec.model_id}_predictions.jsonl"
    embeddings_path = out_dir / f"{spec.model_id}_embeddings.jsonl"
    _write_validated_jsonl(predictions_path, prediction_rows, "predictions")
    _write_validated_jsonl(embeddings_path, embedding_rows, "embeddings")
    meta = {
        "model_id": spec.model_id,
        "n_instances": spec.n_instances,
        "k": plan.k,
        "max_seq_len": spec.max_seq_len,
        "truncated_speakers": sorted(set(truncated)),
    }
    (out_dir / f"{spec.model_id}_export_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    return predictions_path, embeddings_path


def export_only(
    checkpoint: Path,
    dataset: SpeakerDataset,
    model_id: str,
    out_dir: Path,
    max_seq_len: int = 256,
) -> Path:
    """Deterministic embeddings from a saved checkpoint, evaluation mode."""
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    checkpoint = Path(checkpoint)
    if not checkpoint.is_dir():
        raise ExporterError(f"checkpoint not found: {checkpoint}")
    model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
    tokenizer = AutoTokenizer.from_pretrained(checkpoint)
    speakers = sorted(dataset.texts)
    for s in speakers:
        if not dataset.texts[s].strip():
            raise ExporterError(f"speaker {s!r} has empty text")
    vectors = pooled_embeddings(
        model, tokenizer, [dataset.texts[s] for s in speakers], max_seq_len
    )
    rows = [
        {"speaker_id": s, "model_id": model_id, "vector": [float(v) for v in vec]}
        for s, vec in zip(speakers, vectors)
    ]
    out_dir = Path(out_dir)
    path = out_dir / f"{model_id}_embeddings.jsonl"
    _write_validated_jsonl(path, rows, "embeddings")
    truncated = [
        s for s in speakers if was_truncated(tokenizer, dataset.texts[s], max_seq_len)
    ]
    meta = {
        "model_id": model_id,
        "checkpoint": str(checkpoint),
        "max_seq_len": max_seq_len,
        "truncated_speakers": truncated,
    }
    (out_dir / f"{model_id}_export_meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )
    return path
