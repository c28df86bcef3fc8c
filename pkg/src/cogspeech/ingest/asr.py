"""Parsers for ASR session JSON and diarization segmentation CSV."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from cogspeech.errors import ParseError, ValidationError
from cogspeech.ingest.types import (
    LABEL_TO_INT,
    SessionRecord,
    Utterance,
    WordToken,
    session_to_dict,
)

_SESSION_KEYS = {"speaker_id", "label", "utterances"}
_UTTERANCE_KEYS = {"words"}
_WORD_KEYS = {"text", "start_s", "end_s", "confidence", "syllables"}

SEGMENTATION_HEADER = ["speaker", "begin_ms", "end_ms"]


@dataclass(frozen=True)
class Segment:
    speaker: str
    begin_us: int
    end_us: int


def _require_keys(obj: dict, allowed: set, required: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ValidationError(f"{where}: missing key(s) {sorted(missing)}")


def _parse_word(obj, where: str) -> WordToken:
    if not isinstance(obj, dict):
        raise ValidationError(f"{where}: word entry is not an object")
    _require_keys(obj, _WORD_KEYS, {"text", "start_s", "end_s", "confidence"}, where)
    if not isinstance(obj["text"], str):
        raise ValidationError(f"{where}: text is not a string")
    for key in ("start_s", "end_s", "confidence"):
        if not isinstance(obj[key], (int, float)) or isinstance(obj[key], bool):
            raise ValidationError(f"{where}: {key} is not a number")
    syllables = obj.get("syllables")
    if syllables is not None and (not isinstance(syllables, int) or syllables < 1):
        raise ValidationError(f"{where}: syllables must be a positive integer")
    try:
        return WordToken.from_seconds(
            obj["text"], obj["start_s"], obj["end_s"], obj["confidence"], syllables
        )
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def parse_asr_session(asr_json: bytes, segmentation: bytes | None = None) -> SessionRecord:
    """Parse one speaker's ASR output, optionally re-segmenting utterances.

    When a segmentation is given, its time intervals define the utterance
    boundaries; words are binned by midpoint, falling back to the nearest
    segment for words whose midpoint lies in no interval.
    """
    try:
        obj = json.loads(asr_json.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"ASR JSON is not valid UTF-8: {exc.reason}", offset=exc.start)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed ASR JSON: {exc.msg}", offset=exc.pos)

    if not isinstance(obj, dict):
        raise ValidationError("ASR JSON top level is not an object")
    _require_keys(obj, _SESSION_KEYS, _SESSION_KEYS, "session")
    speaker_id = obj["speaker_id"]
    if not isinstance(speaker_id, str) or not speaker_id:
        raise ValidationError("session: speaker_id must be a non-empty string")

    raw_label = obj["label"]
    if raw_label is None:
        label = None
    elif raw_label in LABEL_TO_INT:
        label = LABEL_TO_INT[raw_label]
    else:
        raise ValidationError(f"session: label {raw_label!r} not one of CN, AD, null")

    if not isinstance(obj["utterances"], list):
        raise ValidationError("session: utterances is not a list")

    utterances = []
    for u_idx, u_obj in enumerate(obj["utterances"]):
        where = f"utterances[{u_idx}]"
        if not isinstance(u_obj, dict):
            raise ValidationError(f"{where}: not an object")
        _require_keys(u_obj, _UTTERANCE_KEYS, _UTTERANCE_KEYS, where)
        if not isinstance(u_obj["words"], list):
            raise ValidationError(f"{where}: words is not a list")
        words = [
            _parse_word(w_obj, f"{where}.words[{w_idx}]")
            for w_idx, w_obj in enumerate(u_obj["words"])
        ]
        if not words:
            raise ValidationError(f"{where}: empty word list")
        utterances.append(Utterance(index=len(utterances), words=tuple(words)))

    if not utterances:
        raise ValidationError(f"session {speaker_id!r} has no utterances")

    if segmentation is not None:
        segments = [s for s in parse_segmentation(segmentation) if s.speaker == speaker_id]
        if not segments:
            raise ValidationError(f"segmentation has no rows for speaker {speaker_id!r}")
        utterances = _resegment(utterances, segments, speaker_id)

    return SessionRecord(speaker_id=speaker_id, label=label, utterances=tuple(utterances))


def parse_segmentation(data: bytes) -> list[Segment]:
    """Parse diarization CSV: header speaker,begin_ms,end_ms with integer ms."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"segmentation CSV is not valid UTF-8: {exc.reason}", offset=exc.start)
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != SEGMENTATION_HEADER:
        raise ParseError(
            f"segmentation CSV header must be {','.join(SEGMENTATION_HEADER)}", line=1
        )
    segments = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError("segmentation row does not have 3 columns", line=line_no)
        speaker, begin_raw, end_raw = row
        try:
            begin_ms, end_ms = int(begin_raw), int(end_raw)
        except ValueError:
            raise ParseError("segmentation times must be integer milliseconds", line=line_no)
        if end_ms < begin_ms:
            raise ValidationError(f"segmentation line {line_no}: end_ms < begin_ms")
        segments.append(Segment(speaker=speaker, begin_us=begin_ms * 1000, end_us=end_ms * 1000))

    by_speaker: dict[str, list[Segment]] = {}
    for seg in segments:
        by_speaker.setdefault(seg.speaker, []).append(seg)
    for speaker, segs in by_speaker.items():
        segs.sort(key=lambda s: s.begin_us)
        for a, b in zip(segs, segs[1:]):
            if b.begin_us < a.end_us:
                raise ValidationError(f"segmentation overlap for speaker {speaker!r}")
    return segments


def _resegment(
    utterances: list[Utterance], segments: list[Segment], speaker_id: str
) -> list[Utterance]:
    segments = sorted(segments, key=lambda s: s.begin_us)
    words = sorted(
        (w for u in utterances for w in u.words), key=lambda w: (w.start_us, w.end_us)
    )
    buckets: list[list[WordToken]] = [[] for _ in segments]
    for word in words:
        mid = (word.start_us + word.end_us) // 2
        chosen = None
        for i, seg in enumerate(segments):
            if seg.begin_us <= mid < seg.end_us:
                chosen = i
                break
        if chosen is None:
            # outside every interval: nearest segment by midpoint distance
            chosen = min(
                range(len(segments)),
                key=lambda i: max(segments[i].begin_us - mid, mid - segments[i].end_us, 0),
            )
        buckets[chosen].append(word)
    out = []
    for bucket in buckets:
        if bucket:
            out.append(Utterance(index=len(out), words=tuple(bucket)))
    if not out:
        raise ValidationError(f"segmentation left no utterances for speaker {speaker_id!r}")
    return out


def session_to_json_bytes(session: SessionRecord) -> bytes:
    """Serialize to the canonical schema. Round-trips through parse_asr_session."""
    return (json.dumps(session_to_dict(session), indent=2) + "\n").encode("utf-8")
