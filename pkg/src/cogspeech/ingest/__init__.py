"""Parsing and validation of all external inputs into the internal data model."""

from cogspeech.ingest.asr import (
    parse_asr_session,
    parse_segmentation,
    session_to_json_bytes,
)
from cogspeech.ingest.cmudict import (
    EMPTY_LEXICON,
    SyllableLexicon,
    load_syllable_lexicon,
    syllable_count,
    vowel_group_count,
)
from cogspeech.ingest.conllu import ConlluSentence, ConlluToken, parse_conllu
from cogspeech.ingest.tables import (
    NgramTable,
    load_labels_csv,
    load_ngram_table,
    load_wordlist,
)
from cogspeech.ingest.types import (
    LABEL_TO_INT,
    INT_TO_LABEL,
    SessionRecord,
    Utterance,
    WordToken,
    session_to_dict,
)

__all__ = [
    "parse_asr_session",
    "parse_segmentation",
    "session_to_json_bytes",
    "SyllableLexicon",
    "EMPTY_LEXICON",
    "load_syllable_lexicon",
    "syllable_count",
    "vowel_group_count",
    "ConlluSentence",
    "ConlluToken",
    "parse_conllu",
    "NgramTable",
    "load_labels_csv",
    "load_ngram_table",
    "load_wordlist",
    "LABEL_TO_INT",
    "INT_TO_LABEL",
    "SessionRecord",
    "Utterance",
    "WordToken",
    "session_to_dict",
]
