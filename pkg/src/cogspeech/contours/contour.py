"""Sliding-window feature contours: one named vector per window of sentences."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogspeech.errors import ValidationError
from cogspeech.contours.measures import Window
from cogspeech.contours.registry import MeasureRegistry
from cogspeech.ingest.conllu import ConlluSentence


@dataclass(frozen=True)
class WindowConfig:
    ws: int = 1
    smoothing: float = 1.0

    def __post_init__(self):
        if self.ws < 1:
            raise ValidationError(f"window size {self.ws} < 1")
        if self.smoothing <= 0:
            raise ValidationError(f"smoothing {self.smoothing} must be > 0")


@dataclass(frozen=True)
class FeatureContour:
    """Per-window feature rows for one speaker; rows align with windows."""

    speaker_id: str
    measure_names: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        width = len(self.measure_names)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValidationError(
                    f"contour row {i} has {len(row)} values, expected {width}"
                )
            if not all(np.isfinite(v) for v in row):
                raise ValidationError(f"contour row {i} contains non-finite values")

    def to_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.rows)


def windows(sentences: list[ConlluSentence], ws: int) -> list[Window]:
    """All length-ws sentence groups with stride 1; a short text is one window."""
    if not sentences:
        raise ValidationError("no sentences to window")
    if ws < 1:
        raise ValidationError(f"window size {ws} < 1")
    if len(sentences) < ws:
        return [list(sentences)]
    return [list(sentences[i : i + ws]) for i in range(len(sentences) - ws + 1)]


def contour(
    sentences: list[ConlluSentence],
    registry: MeasureRegistry,
    cfg: WindowConfig = WindowConfig(),
    speaker_id: str = "",
) -> FeatureContour:
    """Evaluate every registry measure on every window and impute gaps.

    Missing values are replaced by the per-measure mean over this contour;
    a measure missing everywhere becomes 0. Column order follows the registry.
    """
    groups = windows(sentences, cfg.ws)
    columns: list[list[float | None]] = []
    for measure in registry:
        columns.append([measure.fn(window) for window in groups])

    imputed: list[list[float]] = []
    for values in columns:
        present = [v for v in values if v is not None]
        fill = sum(present) / len(present) if present else 0.0
        imputed.append([fill if v is None else v for v in values])

    rows = tuple(
        tuple(imputed[j][i] for j in range(len(registry))) for i in range(len(groups))
    )
    return FeatureContour(speaker_id=speaker_id, measure_names=registry.names, rows=rows)


def concat_contours(left: FeatureContour, right: FeatureContour) -> FeatureContour:
    """Column-wise concatenation; rows of both contours must align one-to-one."""
    if left.speaker_id != right.speaker_id:
        raise ValidationError(
            f"cannot concat contours of {left.speaker_id!r} and {right.speaker_id!r}"
        )
    if len(left) != len(right):
        raise ValidationError(
            f"contour row mismatch for {left.speaker_id!r}: {len(left)} vs {len(right)}"
        )
    overlap = set(left.measure_names) & set(right.measure_names)
    if overlap:
        raise ValidationError(f"duplicate measure names {sorted(overlap)}")
    return FeatureContour(
        speaker_id=left.speaker_id,
        measure_names=left.measure_names + right.measure_names,
        rows=tuple(a + b for a, b in zip(left.rows, right.rows)),
    )


def contour_csv(contours: list[FeatureContour]) -> str:
    """Plot-ready CSV: speaker_id,utt_index,<measure columns...>."""
    if not contours:
        raise ValidationError("no contours to render")
    names = contours[0].measure_names
    for c in contours:
        if c.measure_names != names:
            raise ValidationError("contours have differing measure columns")
    lines = ["speaker_id,utt_index," + ",".join(names)]
    for c in contours:
        for i, row in enumerate(c.rows):
            lines.append(
                ",".join([c.speaker_id, str(i)] + [f"{v:.6f}" for v in row])
            )
    return "\n".join(lines) + "\n"
