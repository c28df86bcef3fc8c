"""Internal data model for transcribed speech sessions.

Timestamps are stored as integer microseconds. ASR timings carry at most
millisecond precision, and integer storage makes time arithmetic exact:
shifting every word by a constant or rescaling by a power of two changes
derived features exactly as the algebra says it should, with no float drift.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from cogspeech.errors import ValidationError

US_PER_S = 1_000_000
OVERLAP_TOLERANCE_US = 10_000  # 10 ms of forced-alignment jitter is tolerated

LABEL_TO_INT = {"CN": 0, "AD": 1}
INT_TO_LABEL = {0: "CN", 1: "AD"}


def seconds_to_us(value: float) -> int:
    return round(value * US_PER_S)


@dataclass(frozen=True)
class WordToken:
    """One recognized word with alignment times and ASR confidence."""

    text: str
    start_us: int
    end_us: int
    confidence: float
    syllables: int | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("word text is empty after trimming")
        if self.start_us < 0:
            raise ValidationError(f"word {self.text!r}: start time {self.start_s} < 0")
        if self.end_us < self.start_us:
            raise ValidationError(
                f"word {self.text!r}: end time {self.end_s} < start time {self.start_s}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"word {self.text!r}: confidence {self.confidence} outside [0, 1]"
            )
        if self.syllables is not None and self.syllables < 1:
            raise ValidationError(f"word {self.text!r}: syllable count must be >= 1")

    @classmethod
    def from_seconds(cls, text, start_s, end_s, confidence, syllables=None):
        """Ingest-style constructor: trims and lowercases, quantizes to us."""
        return cls(
            text=text.strip().lower(),
            start_us=seconds_to_us(start_s),
            end_us=seconds_to_us(end_s),
            confidence=float(confidence),
            syllables=syllables,
        )

    @property
    def start_s(self) -> float:
        return self.start_us / US_PER_S

    @property
    def end_s(self) -> float:
        return self.end_us / US_PER_S

    @property
    def duration_s(self) -> float:
        return (self.end_us - self.start_us) / US_PER_S


@dataclass(frozen=True)
class Utterance:
    """An ordered run of words treated as one sentence."""

    index: int
    words: tuple[WordToken, ...]

    def __post_init__(self):
        if not self.words:
            raise ValidationError(f"utterance {self.index}: no words")
        for i in range(len(self.words) - 1):
            cur, nxt = self.words[i], self.words[i + 1]
            if nxt.start_us < cur.start_us:
                raise ValidationError(
                    f"utterance {self.index}: word {i + 1} starts before word {i}"
                )
            if nxt.start_us < cur.end_us - OVERLAP_TOLERANCE_US:
                raise ValidationError(
                    f"utterance {self.index}: word {i + 1} overlaps word {i} "
                    f"by more than {OVERLAP_TOLERANCE_US / US_PER_S:.3f} s"
                )

    @property
    def span_s(self) -> float:
        return (self.words[-1].end_us - self.words[0].start_us) / US_PER_S

    def texts(self) -> list[str]:
        return [w.text for w in self.words]


@dataclass(frozen=True)
class SessionRecord:
    """One speaker's session: utterances plus an optional class label."""

    speaker_id: str
    label: int | None
    utterances: tuple[Utterance, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.speaker_id:
            raise ValidationError("speaker_id is empty")
        if self.label is not None and self.label not in (0, 1):
            raise ValidationError(
                f"speaker {self.speaker_id}: label {self.label!r} not in {{0, 1}}"
            )

    def shifted(self, delta_s: float) -> "SessionRecord":
        """Copy with every word time moved by a constant (exact in us)."""
        delta_us = seconds_to_us(delta_s)
        return SessionRecord(
            speaker_id=self.speaker_id,
            label=self.label,
            utterances=tuple(
                Utterance(
                    index=u.index,
                    words=tuple(
                        WordToken(
                            text=w.text,
                            start_us=w.start_us + delta_us,
                            end_us=w.end_us + delta_us,
                            confidence=w.confidence,
                            syllables=w.syllables,
                        )
                        for w in u.words
                    ),
                )
                for u in self.utterances
            ),
        )


def session_to_dict(session: SessionRecord) -> dict:
    """Render a session in the canonical ASR-session JSON schema."""
    utterances = []
    for utt in session.utterances:
        words = []
        for w in utt.words:
            entry = {
                "text": w.text,
                "start_s": w.start_s,
                "end_s": w.end_s,
                "confidence": w.confidence,
            }
            if w.syllables is not None:
                entry["syllables"] = w.syllables
            words.append(entry)
        utterances.append({"words": words})
    return {
        "speaker_id": session.speaker_id,
        "label": None if session.label is None else INT_TO_LABEL[session.label],
        "utterances": utterances,
    }
