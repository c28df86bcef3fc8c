"""Per-utterance (dis)fluency measures and speaker-level summaries.

Eight measures per utterance: mean syllable duration, syllables per minute,
silent-pause time, long/short pause counts (2 s split), uh/um counts, and
mean ASR confidence. All arithmetic here is plain Python floats over the
word list in order, so an independent re-implementation of the same
definitions reproduces results bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from cogspeech.errors import ValidationError
from cogspeech.ingest.cmudict import SyllableLexicon, syllable_count
from cogspeech.ingest.types import SessionRecord, Utterance

UH = "UH"
UM = "UM"

DEFAULT_FILLED_PAUSE_ALIASES: Mapping[str, str] = MappingProxyType(
    {"uh": UH, "er": UH, "eh": UH, "um": UM, "hm": UM, "uhm": UM}
)

# column order of the per-utterance CSV and of vectorized features
CSV_COLUMNS = (
    "msd",
    "spm",
    "pause_time",
    "n_long",
    "n_short",
    "n_uh",
    "n_um",
    "mean_conf",
)


@dataclass(frozen=True)
class PauseConfig:
    """Silent-pause thresholds and the filled-pause token inventory.

    Gaps at most min_gap_s are alignment jitter, not pauses. A gap of
    exactly long_threshold_s counts as short (the long bin is strictly
    greater).
    """

    long_threshold_s: float = 2.0
    min_gap_s: float = 0.25
    filled_pause_aliases: Mapping[str, str] = field(
        default_factory=lambda: DEFAULT_FILLED_PAUSE_ALIASES
    )

    def __post_init__(self):
        if not 0 <= self.min_gap_s < self.long_threshold_s:
            raise ValidationError(
                f"require 0 <= min_gap_s ({self.min_gap_s}) < "
                f"long_threshold_s ({self.long_threshold_s})"
            )
        bad = {v for v in self.filled_pause_aliases.values()} - {UH, UM}
        if bad:
            raise ValidationError(f"filled-pause aliases map to unknown kinds {sorted(bad)}")


@dataclass(frozen=True)
class DisfluencyVector:
    mean_syllable_duration: float
    syllables_per_minute: float
    pause_time: float
    n_long_pauses: int
    n_short_pauses: int
    n_uh: int
    n_um: int
    mean_confidence: float

    def __post_init__(self):
        for name in ("mean_syllable_duration", "syllables_per_minute", "pause_time"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} = {value} is not a finite non-negative number")
        for name in ("n_long_pauses", "n_short_pauses", "n_uh", "n_um"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} is negative")
        if not 0.0 <= self.mean_confidence <= 1.0:
            raise ValidationError(f"mean_confidence {self.mean_confidence} outside [0, 1]")

    def to_row(self) -> list[float]:
        """Values in CSV_COLUMNS order."""
        return [
            self.mean_syllable_duration,
            self.syllables_per_minute,
            self.pause_time,
            float(self.n_long_pauses),
            float(self.n_short_pauses),
            float(self.n_uh),
            float(self.n_um),
            self.mean_confidence,
        ]


def inter_word_gaps(utterance: Utterance) -> list[float]:
    """Silences between consecutive words, clamped at zero; length n_words - 1."""
    gaps = []
    for cur, nxt in zip(utterance.words, utterance.words[1:]):
        gaps.append(max(0.0, (nxt.start_us - cur.end_us) / 1_000_000))
    return gaps


def pause_features(utterance: Utterance, cfg: PauseConfig) -> tuple[float, int, int]:
    """(total pause time, long-pause count, short-pause count)."""
    pause_time = 0.0
    n_long = 0
    n_short = 0
    for gap in inter_word_gaps(utterance):
        if gap > cfg.min_gap_s:
            pause_time += gap
            if gap > cfg.long_threshold_s:
                n_long += 1
            else:
                n_short += 1
    return pause_time, n_long, n_short


def rate_features(utterance: Utterance, lexicon: SyllableLexicon) -> tuple[float, float]:
    """(mean syllable duration, syllables per minute) over the utterance span.

    The span includes internal pauses; a zero-span utterance yields 0 syl/min
    by convention. A token's own syllable count, when set, wins over lookup.
    """
    total_syllables = 0
    total_duration = 0.0
    for word in utterance.words:
        count = word.syllables if word.syllables is not None else syllable_count(lexicon, word.text)
        total_syllables += count
        total_duration += word.duration_s
    mean_syllable_duration = total_duration / total_syllables
    span = utterance.span_s
    if span <= 0.0:
        syllables_per_minute = 0.0
    else:
        syllables_per_minute = total_syllables / (span / 60.0)
    return mean_syllable_duration, syllables_per_minute


def filled_pause_counts(utterance: Utterance, cfg: PauseConfig) -> tuple[int, int]:
    """(uh-type count, um-type count) under the alias map."""
    n_uh = 0
    n_um = 0
    for word in utterance.words:
        kind = cfg.filled_pause_aliases.get(word.text)
        if kind == UH:
            n_uh += 1
        elif kind == UM:
            n_um += 1
    return n_uh, n_um


def disfluency_vector(
    utterance: Utterance, lexicon: SyllableLexicon, cfg: PauseConfig
) -> DisfluencyVector:
    pause_time, n_long, n_short = pause_features(utterance, cfg)
    msd, spm = rate_features(utterance, lexicon)
    n_uh, n_um = filled_pause_counts(utterance, cfg)
    mean_conf = sum(w.confidence for w in utterance.words) / len(utterance.words)
    return DisfluencyVector(
        mean_syllable_duration=msd,
        syllables_per_minute=spm,
        pause_time=pause_time,
        n_long_pauses=n_long,
        n_short_pauses=n_short,
        n_uh=n_uh,
        n_um=n_um,
        mean_confidence=mean_conf,
    )


def session_vectors(
    session: SessionRecord, lexicon: SyllableLexicon, cfg: PauseConfig
) -> list[DisfluencyVector]:
    return [disfluency_vector(u, lexicon, cfg) for u in session.utterances]


def _mean_sd(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n  # population
    return mean, math.sqrt(variance)


def speaker_summary(
    session: SessionRecord, lexicon: SyllableLexicon, cfg: PauseConfig
) -> dict[str, tuple[float, float]]:
    """Per-measure (mean, population SD) across the session's utterances."""
    if not session.utterances:
        raise ValidationError(f"session {session.speaker_id!r} has no utterances")
    rows = [v.to_row() for v in session_vectors(session, lexicon, cfg)]
    summary = {}
    for j, name in enumerate(CSV_COLUMNS):
        summary[name] = _mean_sd([row[j] for row in rows])
    return summary


def speaker_means(
    session: SessionRecord, lexicon: SyllableLexicon, cfg: PauseConfig
) -> list[float]:
    """Mean of each measure over utterances; the LR aggregate feature vector."""
    return [mean for mean, _ in speaker_summary(session, lexicon, cfg).values()]


def utterance_csv(
    sessions: list[SessionRecord], lexicon: SyllableLexicon, cfg: PauseConfig
) -> str:
    """Per-utterance vectors, one row per (speaker, utterance)."""
    lines = ["speaker_id,utt_index," + ",".join(CSV_COLUMNS)]
    for session in sessions:
        for utt, vec in zip(session.utterances, session_vectors(session, lexicon, cfg)):
            cells = [session.speaker_id, str(utt.index)]
            cells += [_format_cell(name, value) for name, value in zip(CSV_COLUMNS, vec.to_row())]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def summary_csv(
    sessions: list[SessionRecord], lexicon: SyllableLexicon, cfg: PauseConfig
) -> str:
    """Group statistics per label, at both utterance and session granularity.

    The utterance granularity pools every utterance of the group; the session
    granularity first averages within each speaker. SDs are population SDs.
    """
    groups: dict[str, list[SessionRecord]] = {}
    for session in sessions:
        key = {0: "CN", 1: "AD", None: "unlabeled"}[session.label]
        groups.setdefault(key, []).append(session)

    lines = ["label,granularity,measure,mean,sd,sd_basis"]
    for label in sorted(groups):
        members = groups[label]
        pooled_rows = []
        session_rows = []
        for session in members:
            rows = [v.to_row() for v in session_vectors(session, lexicon, cfg)]
            pooled_rows.extend(rows)
            session_rows.append(
                [sum(r[j] for r in rows) / len(rows) for j in range(len(CSV_COLUMNS))]
            )
        for granularity, rows in (("utterance", pooled_rows), ("session", session_rows)):
            for j, name in enumerate(CSV_COLUMNS):
                mean, sd = _mean_sd([row[j] for row in rows])
                lines.append(
                    f"{label},{granularity},{name},{mean:.6f},{sd:.6f},population"
                )
    return "\n".join(lines) + "\n"


def _format_cell(name: str, value: float) -> str:
    if name.startswith("n_"):
        return str(int(value))
    return f"{value:.6f}"
