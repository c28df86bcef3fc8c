"""Reads the primary toolkit's file interfaces: canonical session JSON,
labels CSV, and the shared fold-plan JSON. One text sequence per speaker,
utterances joined with full stops."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from lm_exporter.config import ExporterError

LABEL_TO_INT = {"CN": 0, "AD": 1}


@dataclass(frozen=True)
class SpeakerDataset:
    texts: dict[str, str]
    labels: dict[str, int]


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignments: dict[str, int]

    def speakers_in(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f == fold)

    def train_speakers(self, fold: int) -> list[str]:
        return sorted(s for s, f in self.assignments.items() if f != fold)


def session_text(payload: dict) -> str:
    sentences = []
    for utterance in payload.get("utterances", []):
        words = [w["text"] for w in utterance.get("words", [])]
        if words:
            sentences.append(" ".join(words) + " .")
    return " ".join(sentences)


def load_dataset(sessions_dir: Path, labels_csv: Path | None = None) -> SpeakerDataset:
    texts: dict[str, str] = {}
    labels: dict[str, int] = {}
    paths = sorted(Path(sessions_dir).glob("*.json"))
    if not paths:
        raise ExporterError(f"no session files in {sessions_dir}")
    for path in paths:
        payload = json.loads(path.read_text())
        speaker = payload["speaker_id"]
        text = session_text(payload)
        if not text.strip():
            raise ExporterError(f"speaker {speaker!r} has empty text")
        texts[speaker] = text
        if payload.get("label") is not None:
            labels[speaker] = LABEL_TO_INT[payload["label"]]
    if labels_csv is not None:
        labels = {}
        rows = Path(labels_csv).read_text().splitlines()
        if not rows or rows[0] != "speaker_id,label":
            raise ExporterError("labels CSV header must be speaker_id,label")
        for row in rows[1:]:
            if not row.strip():
                continue
            speaker, label = row.split(",")
            labels[speaker] = LABEL_TO_INT[label]
    missing = sorted(set(texts) - set(labels))
    if missing:
        raise ExporterError(f"no labels for speakers {missing}")
    return SpeakerDataset(texts=texts, labels=labels)


def load_fold_plan(path: Path) -> FoldPlan:
    payload = json.loads(Path(path).read_text())
    if set(payload) != {"k", "seed", "assignments"}:
        raise ExporterError("fold plan must have keys k, seed, assignments")
    return FoldPlan(
        k=int(payload["k"]),
        seed=int(payload["seed"]),
        assignments={str(s): int(f) for s, f in payload["assignments"].items()},
    )
