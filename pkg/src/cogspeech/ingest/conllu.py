"""CoNLL-U reader: syntactic annotations arrive as input, never computed here."""
from __future__ import annotations

from dataclasses import dataclass

from cogspeech.errors import ParseError, ValidationError

N_COLUMNS = 10


@dataclass(frozen=True)
class ConlluToken:
    id: int
    form: str
    lemma: str
    upos: str
    xpos: str
    feats: str
    head: int
    deprel: str
    deps: str
    misc: str


@dataclass(frozen=True)
class ConlluSentence:
    tokens: tuple[ConlluToken, ...]

    @property
    def root(self) -> ConlluToken:
        return next(t for t in self.tokens if t.head == 0)

    def token(self, token_id: int) -> ConlluToken:
        return self.tokens[token_id - 1]

    def children(self, token_id: int) -> list[ConlluToken]:
        return [t for t in self.tokens if t.head == token_id]


def parse_conllu(data: bytes) -> list[ConlluSentence]:
    """Parse CoNLL-U into one validated single-rooted tree per sentence.

    Multiword-token ranges (1-2) are skipped in favor of their parts; empty
    nodes (1.1) are skipped. Head structure must form a tree: exactly one
    root, every head resolvable, no cycles.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"CoNLL-U is not valid UTF-8: {exc.reason}", offset=exc.start)

    sentences: list[ConlluSentence] = []
    block: list[ConlluToken] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            if block:
                sentences.append(_finish_sentence(block, len(sentences)))
                block = []
            continue
        if line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != N_COLUMNS:
            raise ParseError(
                f"expected {N_COLUMNS} tab-separated columns, got {len(columns)}",
                line=line_no,
            )
        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            continue  # multiword range or empty node
        try:
            tid = int(token_id)
        except ValueError:
            raise ParseError(f"token id {token_id!r} is not an integer", line=line_no)
        try:
            head = int(columns[6])
        except ValueError:
            raise ParseError(f"head {columns[6]!r} is not an integer", line=line_no)
        block.append(
            ConlluToken(
                id=tid,
                form=columns[1],
                lemma=columns[2],
                upos=columns[3],
                xpos=columns[4],
                feats=columns[5],
                head=head,
                deprel=columns[7],
                deps=columns[8],
                misc=columns[9],
            )
        )
    if block:
        sentences.append(_finish_sentence(block, len(sentences)))
    return sentences


def _finish_sentence(tokens: list[ConlluToken], sentence_index: int) -> ConlluSentence:
    n = len(tokens)
    ids = [t.id for t in tokens]
    if ids != list(range(1, n + 1)):
        raise ValidationError(
            f"sentence {sentence_index}: token ids are not contiguous from 1"
        )
    roots = [t for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise ValidationError(
            f"sentence {sentence_index}: {len(roots)} roots, expected exactly 1"
        )
    for t in tokens:
        if not 0 <= t.head <= n:
            raise ValidationError(
                f"sentence {sentence_index}: token {t.id} head {t.head} out of range"
            )
    # every token must reach the root; a walk longer than n means a cycle
    for t in tokens:
        seen = 0
        cur = t.head
        while cur != 0:
            cur = tokens[cur - 1].head
            seen += 1
            if seen > n:
                raise ValidationError(f"sentence {sentence_index}: head cycle detected")
    return ConlluSentence(tokens=tuple(tokens))
