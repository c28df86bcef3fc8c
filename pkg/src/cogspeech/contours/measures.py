"""Window-level linguistic measures over annotated sentences.

Measures return None for windows where they are undefined (e.g. no
alphabetic tokens); the contour builder imputes those later. Tokens are
CoNLL-U tokens; "alphabetic" is operationalized as UPOS != PUNCT.
"""
from __future__ import annotations

import math
import zlib

from cogspeech.ingest.conllu import ConlluSentence, ConlluToken
from cogspeech.ingest.tables import NgramTable

LEXICAL_UPOS = frozenset({"NOUN", "VERB", "ADJ", "ADV"})

# deprels that open a clause; the set is fixed, matched against the full
# deprel string (acl and acl:relcl are listed separately on purpose)
CLAUSAL_DEPRELS = frozenset({"csubj", "ccomp", "xcomp", "advcl", "acl", "acl:relcl"})
NOMINAL_MODIFIER_DEPRELS = frozenset({"amod", "nmod", "acl", "acl:relcl"})

SYNTACTIC_MEASURES = (
    "mean_length_clause",
    "clauses_per_sentence",
    "dependent_clauses_per_tunit",
    "coordinate_phrases_per_clause",
    "complex_nominals_per_clause",
)

DEFLATE_LEVEL = 6  # fixed so ratios are comparable across runs and platforms

Window = list[ConlluSentence]


def content_tokens(window: Window) -> list[ConlluToken]:
    """All non-punctuation tokens of the window, in order."""
    return [t for sent in window for t in sent.tokens if t.upos != "PUNCT"]


def ttr(tokens: list[ConlluToken]) -> float | None:
    """Type-token ratio V/N over lowercased forms."""
    if not tokens:
        return None
    types = {t.form.lower() for t in tokens}
    return len(types) / len(tokens)


def cttr(tokens: list[ConlluToken]) -> float | None:
    """Corrected TTR: V / sqrt(2N)."""
    if not tokens:
        return None
    types = {t.form.lower() for t in tokens}
    return len(types) / math.sqrt(2 * len(tokens))


def lexical_density(tokens: list[ConlluToken]) -> float | None:
    """Share of lexical words (NOUN, VERB, ADJ, ADV) among non-punct tokens."""
    if not tokens:
        return None
    lexical = sum(1 for t in tokens if t.upos in LEXICAL_UPOS)
    return lexical / len(tokens)


def sophistication(tokens: list[ConlluToken], wordlist: frozenset[str]) -> float | None:
    """Fraction of tokens whose lowercased form is NOT on the frequent-word list."""
    if not tokens:
        return None
    off_list = sum(1 for t in tokens if t.form.lower() not in wordlist)
    return off_list / len(tokens)


def ngram_logfreq(
    tokens_by_sentence: list[list[ConlluToken]], table: NgramTable, smoothing: float = 1.0
) -> float | None:
    """Mean additive-smoothed log10 frequency of the window's n-grams.

    N-grams never cross sentence boundaries. Each n-gram g contributes
    log10((count(g) + k) / (total + k * vocab_size)).
    """
    denominator = table.total + smoothing * table.vocab_size
    values = []
    for tokens in tokens_by_sentence:
        forms = [t.form.lower() for t in tokens]
        for i in range(len(forms) - table.n + 1):
            gram = " ".join(forms[i : i + table.n])
            values.append(math.log10((table.count(gram) + smoothing) / denominator))
    if not values:
        return None
    return sum(values) / len(values)


def deflate_ratio(text: str, level: int = DEFLATE_LEVEL) -> float | None:
    """Raw-DEFLATE compressed length over original length (no container headers).

    Short inputs can exceed 1.0 from stream overhead; that is reported as-is.
    """
    raw = text.encode("utf-8")
    if not raw:
        return None
    compressor = zlib.compressobj(level, zlib.DEFLATED, -15)
    compressed = compressor.compress(raw) + compressor.flush()
    return len(compressed) / len(raw)


def kolmogorov_view(window: Window, view: str) -> str:
    """Text rendering compressed by the information-theoretic measures.

    SURFACE joins token forms, POS joins UPOS tags, MORPH joins FEATS strings
    (one reading of a morphological view; FEATS of "_" contribute "_").
    """
    if view == "SURFACE":
        parts = [t.form for sent in window for t in sent.tokens]
    elif view == "POS":
        parts = [t.upos for sent in window for t in sent.tokens]
    elif view == "MORPH":
        parts = [t.feats for sent in window for t in sent.tokens]
    else:
        raise ValueError(f"unknown kolmogorov view {view!r}")
    return " ".join(parts)


def kolmogorov_deflate(window: Window, view: str) -> float | None:
    text = kolmogorov_view(window, view)
    if not text:
        return None
    return deflate_ratio(text)


def clause_counts(sentence: ConlluSentence) -> dict[str, int]:
    """Raw counts feeding the syntactic ratios, for one sentence."""
    root_id = sentence.root.id
    clauses = 1
    t_units = 1
    coordinate_phrases = 0
    complex_nominals = 0
    modified_nouns = set()
    for t in sentence.tokens:
        if t.deprel in CLAUSAL_DEPRELS:
            clauses += 1
        if t.deprel == "conj":
            if t.head == root_id:
                t_units += 1
            head = sentence.token(t.head)
            if head.upos != "VERB":
                coordinate_phrases += 1
        if t.deprel in NOMINAL_MODIFIER_DEPRELS and t.head != 0:
            head = sentence.token(t.head)
            if head.upos == "NOUN":
                modified_nouns.add(head.id)
    complex_nominals = len(modified_nouns)
    non_punct = sum(1 for t in sentence.tokens if t.upos != "PUNCT")
    return {
        "clauses": clauses,
        "t_units": t_units,
        "coordinate_phrases": coordinate_phrases,
        "complex_nominals": complex_nominals,
        "non_punct_tokens": non_punct,
    }


def syntactic_measures(window: Window) -> dict[str, float]:
    """The five dependency-based complexity ratios, aggregated over the window.

    Counts are summed across sentences; each sentence contributes one root
    clause and one base T-unit, so dependent clauses = clauses - n_sentences.
    """
    totals = {"clauses": 0, "t_units": 0, "coordinate_phrases": 0,
              "complex_nominals": 0, "non_punct_tokens": 0}
    for sentence in window:
        for key, value in clause_counts(sentence).items():
            totals[key] += value
    n_sentences = len(window)
    clauses = totals["clauses"]
    dependent = clauses - n_sentences
    return {
        "mean_length_clause": totals["non_punct_tokens"] / clauses,
        "clauses_per_sentence": clauses / n_sentences,
        "dependent_clauses_per_tunit": dependent / totals["t_units"],
        "coordinate_phrases_per_clause": totals["coordinate_phrases"] / clauses,
        "complex_nominals_per_clause": totals["complex_nominals"] / clauses,
    }
