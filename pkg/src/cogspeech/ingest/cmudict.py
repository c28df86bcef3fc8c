"""Syllable counts from a CMU-style pronouncing dictionary."""
from __future__ import annotations

import re
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from cogspeech.errors import ValidationError

_STRESS_DIGITS = frozenset("012")
_VOWEL_LETTERS = frozenset("aeiouy")
_VARIANT_RE = re.compile(r"^(.*)\(\d+\)$")


@dataclass(frozen=True)
class SyllableLexicon:
    """Uppercase word -> syllable count; counts are always >= 1."""

    counts: Mapping[str, int]
    skipped_lines: int = 0

    def get(self, word: str) -> int | None:
        return self.counts.get(word.upper())

    def __len__(self) -> int:
        return len(self.counts)

    def __contains__(self, word: str) -> bool:
        return word.upper() in self.counts


EMPTY_LEXICON = SyllableLexicon(counts=MappingProxyType({}))


def load_syllable_lexicon(data: bytes) -> SyllableLexicon:
    """Parse CMU dictionary text.

    Syllable count = number of phonemes carrying a stress digit. Variant
    entries like COOP(2) collapse onto the base key; the first entry wins.
    Lines with no phonemes (or none with a stress digit) are skipped and
    tallied in skipped_lines.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        text = data.decode("latin-1")

    counts: dict[str, int] = {}
    skipped = 0
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(";;;"):
            continue
        fields = line.split()
        word, phonemes = fields[0], fields[1:]
        syllables = sum(1 for ph in phonemes if ph and ph[-1] in _STRESS_DIGITS)
        if syllables == 0:
            skipped += 1
            continue
        match = _VARIANT_RE.match(word)
        if match:
            word = match.group(1)
        key = word.upper()
        if key not in counts:
            counts[key] = syllables
    return SyllableLexicon(counts=MappingProxyType(counts), skipped_lines=skipped)


def vowel_group_count(word: str) -> int:
    """Number of maximal runs of vowel letters (a, e, i, o, u, y)."""
    groups = 0
    in_group = False
    for ch in word.lower():
        if ch in _VOWEL_LETTERS:
            if not in_group:
                groups += 1
            in_group = True
        else:
            in_group = False
    return groups


def syllable_count(lexicon: SyllableLexicon, word: str) -> int:
    """Dictionary syllable count, or the vowel-group heuristic for OOV words.

    Total on non-empty strings; never returns less than 1.
    """
    if not word.strip():
        raise ValidationError("syllable_count requires a non-empty word")
    hit = lexicon.get(word)
    if hit is not None:
        return hit
    return max(1, vowel_group_count(word))
