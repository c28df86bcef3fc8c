"""Synthetic session generator parameterized by published group statistics.

Each speaker draws per-utterance articulation (mean syllable duration,
confidence) and per-session pause/filled-pause counts from class Gaussians;
word timings are then constructed to realize the draws, so recomputing the
disfluency features recovers the intended class signal. The separation
multiplier pulls the class means apart around their midpoint: 0 makes the
classes identical, 1 reproduces the published gaps, larger values widen them.
"""
from __future__ import annotations

import numpy as np

from cogspeech.errors import ValidationError
from cogspeech.ingest.types import SessionRecord, Utterance, WordToken

# (ad_mean, ad_sd, cn_mean, cn_sd); rates per utterance, counts per session
CLASS_PARAMS = {
    "msd": (0.28, 0.05, 0.26, 0.03),
    "mean_conf": (0.83, 0.09, 0.86, 0.08),
    "n_long": (1.28, 2.22, 0.473, 0.71),
    "n_short": (13.2, 9.28, 15.4, 11.7),
    "n_uh": (0.29, 0.88, 0.24, 0.54),
    "n_um": (0.07, 0.37, 0.31, 0.74),
}

# picture-description-flavored vocabulary with fixed syllable counts
VOCABULARY = (
    ("the", 1), ("boy", 1), ("girl", 1), ("mother", 2), ("cookie", 2),
    ("jar", 1), ("stool", 1), ("water", 2), ("sink", 1), ("window", 2),
    ("curtain", 2), ("falling", 2), ("reaching", 2), ("washing", 2),
    ("dishes", 2), ("garden", 2), ("outside", 2), ("overflowing", 4),
    ("kitchen", 2), ("plate", 1),
)

_SPEAKER_SHARE = 0.4  # of the class SD, between speakers
_UTTERANCE_SHARE = 0.9  # of the class SD, between utterances within a speaker


def _class_param(name: str, label: int, separation: float) -> tuple[float, float]:
    """Class mean pulled away from the midpoint by the separation multiplier.

    The class SDs interpolate to their midpoint as separation drops to 0 so
    the zero-separation classes are truly identical (a variance gap is as
    learnable as a mean gap); beyond 1.0 the published SDs are kept as-is.
    """
    ad_mean, ad_sd, cn_mean, cn_sd = CLASS_PARAMS[name]
    mean_mid = 0.5 * (ad_mean + cn_mean)
    sd_mid = 0.5 * (ad_sd + cn_sd)
    target_mean = ad_mean if label == 1 else cn_mean
    target_sd = ad_sd if label == 1 else cn_sd
    mean = mean_mid + separation * (target_mean - mean_mid)
    sd = sd_mid + min(separation, 1.0) * (target_sd - sd_mid)
    return mean, sd


def _synth_session(
    speaker_id: str, label: int, separation: float, rng: np.random.Generator
) -> SessionRecord:
    n_utts = int(rng.integers(10, 19))

    msd_mean, msd_sd = _class_param("msd", label, separation)
    conf_mean, conf_sd = _class_param("mean_conf", label, separation)
    speaker_msd = max(0.08, rng.normal(msd_mean, msd_sd * _SPEAKER_SHARE))
    speaker_conf = float(np.clip(rng.normal(conf_mean, conf_sd * _SPEAKER_SHARE), 0.05, 1.0))

    session_counts = {}
    for name in ("n_long", "n_short", "n_uh", "n_um"):
        mean, sd = _class_param(name, label, separation)
        session_counts[name] = max(0, int(round(rng.normal(mean, sd))))

    # spread session-level events over utterances
    per_utt = {name: np.zeros(n_utts, dtype=int) for name in session_counts}
    for name, total in session_counts.items():
        for _ in range(total):
            per_utt[name][rng.integers(0, n_utts)] += 1

    utterances = []
    clock_s = 0.0
    for u in range(n_utts):
        utt_msd = max(0.06, rng.normal(speaker_msd, msd_sd * _UTTERANCE_SHARE))
        utt_conf = float(np.clip(rng.normal(speaker_conf, conf_sd * _UTTERANCE_SHARE), 0.05, 1.0))

        n_words = int(rng.integers(6, 14))
        choices = rng.integers(0, len(VOCABULARY), size=n_words)
        tokens = [VOCABULARY[c] for c in choices]
        for _ in range(per_utt["n_uh"][u]):
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), ("uh", 1))
        for _ in range(per_utt["n_um"][u]):
            tokens.insert(int(rng.integers(0, len(tokens) + 1)), ("um", 1))

        n_slots = len(tokens) - 1
        n_long = min(per_utt["n_long"][u], n_slots)
        n_short = min(per_utt["n_short"][u], max(0, n_slots - n_long))
        pause_slots = rng.choice(n_slots, size=n_long + n_short, replace=False) if n_slots else []
        gap_s = rng.uniform(0.0, 0.06, size=max(n_slots, 0))
        for j, slot in enumerate(pause_slots):
            if j < n_long:
                gap_s[slot] = rng.uniform(2.05, 3.5)
            else:
                gap_s[slot] = rng.uniform(0.30, 1.90)

        words = []
        t = clock_s
        for i, (text, syllables) in enumerate(tokens):
            duration = utt_msd * syllables * rng.uniform(0.85, 1.15)
            confidence = float(np.clip(rng.normal(utt_conf, 0.03), 0.0, 1.0))
            words.append(
                WordToken.from_seconds(
                    text, t, t + duration, confidence, syllables=syllables
                )
            )
            t += duration
            if i < n_slots:
                t += gap_s[i]
        utterances.append(Utterance(index=u, words=tuple(words)))
        clock_s = t + rng.uniform(0.5, 1.5)

    return SessionRecord(speaker_id=speaker_id, label=label, utterances=tuple(utterances))


def synth_fixture(
    n_per_class: int, separation: float, seed: int
) -> list[SessionRecord]:
    """Deterministic labeled dataset of 2 * n_per_class synthetic sessions."""
    if n_per_class < 1:
        raise ValidationError("n_per_class must be >= 1")
    if separation < 0:
        raise ValidationError("separation must be >= 0")
    rng = np.random.default_rng(seed)
    sessions = []
    for label, tag in ((0, "cn"), (1, "ad")):
        for i in range(n_per_class):
            sessions.append(
                _synth_session(f"synth_{tag}_{i:03d}", label, separation, rng)
            )
    return sessions
