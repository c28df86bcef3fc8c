"""Shared builders for the test suite."""
from __future__ import annotations

import json

from cogspeech.ingest.conllu import ConlluSentence, ConlluToken
from cogspeech.ingest.types import SessionRecord, Utterance, WordToken


def word(text, start_s, end_s, confidence=0.9, syllables=None) -> WordToken:
    return WordToken.from_seconds(text, start_s, end_s, confidence, syllables)


def utterance(*words: WordToken, index: int = 0) -> Utterance:
    return Utterance(index=index, words=tuple(words))


def session(speaker_id, label, *utterances) -> SessionRecord:
    return SessionRecord(speaker_id=speaker_id, label=label, utterances=tuple(utterances))


def asr_json(speaker_id="spk1", label="CN", utterances=None) -> bytes:
    if utterances is None:
        utterances = [[("the", 0.0, 0.2, 0.9), ("boy", 0.3, 0.6, 0.8)]]
    payload = {
        "speaker_id": speaker_id,
        "label": label,
        "utterances": [
            {
                "words": [
                    {"text": t, "start_s": s, "end_s": e, "confidence": c}
                    for t, s, e, c in words
                ]
            }
            for words in utterances
        ],
    }
    return json.dumps(payload).encode()


def tree(*rows) -> ConlluSentence:
    """Rows: (id, form, upos, head, deprel) or with feats as 6th element."""
    tokens = []
    for row in rows:
        if len(row) == 5:
            tid, form, upos, head, deprel = row
            feats = "_"
        else:
            tid, form, upos, head, deprel, feats = row
        tokens.append(
            ConlluToken(
                id=tid, form=form, lemma=form.lower(), upos=upos, xpos="_",
                feats=feats, head=head, deprel=deprel, deps="_", misc="_",
            )
        )
    return ConlluSentence(tokens=tuple(tokens))


def conllu_text(sentences: list[list[tuple]]) -> bytes:
    """Render rows of (id, form, upos, head, deprel) into CoNLL-U bytes."""
    blocks = []
    for rows in sentences:
        lines = []
        for tid, form, upos, head, deprel in rows:
            lines.append(
                "\t".join(
                    [str(tid), form, form.lower(), upos, "_", "_", str(head), deprel, "_", "_"]
                )
            )
        blocks.append("\n".join(lines))
    return ("\n\n".join(blocks) + "\n").encode()
