"""Loaders for n-gram frequency tables, wordlists, and label files."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from cogspeech.errors import ParseError, ValidationError
from cogspeech.ingest.types import LABEL_TO_INT


@dataclass(frozen=True)
class NgramTable:
    """Counts for space-joined lowercase n-grams of one register and order.

    total is the sum of stored counts (the TSV carries no separate corpus
    size); vocab_size is the number of distinct stored n-grams.
    """

    register: str
    n: int
    counts: Mapping[str, int]
    total: int

    @property
    def vocab_size(self) -> int:
        return len(self.counts)

    def count(self, ngram: str) -> int:
        return self.counts.get(ngram, 0)


def load_ngram_table(data: bytes, n: int, register: str) -> NgramTable:
    """Parse TSV rows "ngram<TAB>count". Duplicate n-grams are summed."""
    if not 1 <= n <= 5:
        raise ValidationError(f"n-gram order {n} outside [1, 5]")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"n-gram TSV is not valid UTF-8: {exc.reason}", offset=exc.start)
    counts: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected exactly one tab per row", line=line_no)
        ngram, count_raw = parts
        try:
            count = int(count_raw)
        except ValueError:
            raise ParseError(f"count {count_raw!r} is not an integer", line=line_no)
        if count < 1:
            raise ValidationError(f"line {line_no}: count {count} < 1")
        if len(ngram.split(" ")) != n:
            raise ValidationError(
                f"line {line_no}: {ngram!r} is not a {n}-gram"
            )
        counts[ngram] = counts.get(ngram, 0) + count
    return NgramTable(
        register=register,
        n=n,
        counts=MappingProxyType(counts),
        total=sum(counts.values()),
    )


def load_wordlist(data: bytes) -> frozenset[str]:
    """One lowercase word per line; blanks skipped."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"wordlist is not valid UTF-8: {exc.reason}", offset=exc.start)
    return frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip()
    )


def load_labels_csv(data: bytes) -> dict[str, int]:
    """Parse labels CSV with header speaker_id,label and labels CN or AD."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"labels CSV is not valid UTF-8: {exc.reason}", offset=exc.start)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["speaker_id", "label"]:
        raise ParseError("labels CSV header must be speaker_id,label", line=1)
    labels: dict[str, int] = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError("labels row does not have 2 columns", line=line_no)
        speaker_id, label = row
        if label not in LABEL_TO_INT:
            raise ValidationError(f"line {line_no}: label {label!r} not one of CN, AD")
        if speaker_id in labels:
            raise ValidationError(f"line {line_no}: duplicate speaker {speaker_id!r}")
        labels[speaker_id] = LABEL_TO_INT[label]
    return labels
