"""Independent straight-line re-implementations used as test oracles.

These share no code with the package: they take plain tuples and dicts and
spell out every computation inline, deliberately unsophisticated.
"""
from __future__ import annotations

from collections import Counter


def disfluency_oracle(words, lexicon, min_gap=0.25, long_thresh=2.0,
                      uh_tokens=("uh", "er", "eh"), um_tokens=("um", "hm", "uhm")):
    """words: list of (text, start_us, end_us, confidence, syllables_or_None),
    with times in integer microseconds per the ingest data contract.
    lexicon: dict UPPERCASE word -> syllable count.
    Returns the eight measures as a dict.
    """
    vowels = "aeiouy"

    def syllables_of(text, explicit):
        if explicit is not None:
            return explicit
        if text.upper() in lexicon:
            return lexicon[text.upper()]
        groups = 0
        previous_was_vowel = False
        for ch in text.lower():
            is_vowel = ch in vowels
            if is_vowel and not previous_was_vowel:
                groups = groups + 1
            previous_was_vowel = is_vowel
        if groups < 1:
            groups = 1
        return groups

    pause_time = 0.0
    n_long = 0
    n_short = 0
    for i in range(len(words) - 1):
        gap = (words[i + 1][1] - words[i][2]) / 1000000
        if gap < 0.0:
            gap = 0.0
        if gap > min_gap:
            pause_time = pause_time + gap
            if gap > long_thresh:
                n_long = n_long + 1
            else:
                n_short = n_short + 1

    total_syllables = 0
    total_duration = 0.0
    for text, start, end, _conf, explicit in words:
        total_syllables = total_syllables + syllables_of(text, explicit)
        total_duration = total_duration + (end - start) / 1000000
    msd = total_duration / total_syllables
    span = (words[-1][2] - words[0][1]) / 1000000
    if span <= 0.0:
        spm = 0.0
    else:
        spm = total_syllables / (span / 60.0)

    n_uh = 0
    n_um = 0
    for text, _s, _e, _c, _y in words:
        if text in uh_tokens:
            n_uh = n_uh + 1
        if text in um_tokens:
            n_um = n_um + 1

    conf_sum = 0.0
    for _t, _s, _e, conf, _y in words:
        conf_sum = conf_sum + conf
    mean_conf = conf_sum / len(words)

    return {
        "msd": msd,
        "spm": spm,
        "pause_time": pause_time,
        "n_long": n_long,
        "n_short": n_short,
        "n_uh": n_uh,
        "n_um": n_um,
        "mean_conf": mean_conf,
    }


def tally_vote_oracle(prob_pairs):
    """Brute-force majority over [p_cn, p_ad] pairs with the documented
    tie-breaks: counts, then mean probabilities, then CN."""
    hard = []
    for cn, ad in prob_pairs:
        if ad > cn:
            hard.append(1)
        else:
            hard.append(0)
    counts = Counter(hard)
    if counts[0] > counts[1]:
        return 0
    if counts[1] > counts[0]:
        return 1
    mean_cn = sum(p[0] for p in prob_pairs) / len(prob_pairs)
    mean_ad = sum(p[1] for p in prob_pairs) / len(prob_pairs)
    if mean_ad > mean_cn:
        return 1
    return 0
