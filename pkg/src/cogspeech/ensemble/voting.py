"""Hard-vote aggregation over bagged model instances."""
from __future__ import annotations

from typing import Iterable, Sequence

from cogspeech.errors import ValidationError
from cogspeech.ensemble.types import PredictionVector


def majority_vote(votes: Sequence[PredictionVector]) -> int:
    """Label backed by most hard votes for one speaker.

    Ties on counts fall back to the argmax of the mean probability vector;
    a tie there too returns CN (0). Order of votes never matters.
    """
    if not votes:
        raise ValidationError("majority_vote needs at least one vote")
    counts = [0, 0]
    sums = [0.0, 0.0]
    for vote in votes:
        counts[vote.hard_label] += 1
        sums[0] += vote.probs[0]
        sums[1] += vote.probs[1]
    if counts[0] != counts[1]:
        return 0 if counts[0] > counts[1] else 1
    mean_cn = sums[0] / len(votes)
    mean_ad = sums[1] / len(votes)
    return 1 if mean_ad > mean_cn else 0


def vote_by_speaker(votes: Iterable[PredictionVector]) -> dict[str, int]:
    grouped: dict[str, list[PredictionVector]] = {}
    for vote in votes:
        grouped.setdefault(vote.speaker_id, []).append(vote)
    return {speaker: majority_vote(group) for speaker, group in grouped.items()}


def model_a_predict(
    cnn_votes: Sequence[PredictionVector],
    external_votes: Sequence[PredictionVector],
    speakers: Sequence[str],
) -> dict[str, int]:
    """Majority vote over the pooled CNN and external instance votes.

    Every speaker must be covered by both sources; the pooled electorate is
    n_cnn + n_external instances per speaker (100 at the defaults).
    """
    cnn_speakers = {v.speaker_id for v in cnn_votes}
    ext_speakers = {v.speaker_id for v in external_votes}
    missing_cnn = sorted(set(speakers) - cnn_speakers)
    missing_ext = sorted(set(speakers) - ext_speakers)
    if missing_cnn or missing_ext:
        parts = []
        if missing_cnn:
            parts.append(f"no CNN votes for {missing_cnn}")
        if missing_ext:
            parts.append(f"no external votes for {missing_ext}")
        raise ValidationError("; ".join(parts))
    pooled = [v for v in cnn_votes if v.speaker_id in set(speakers)]
    pooled += [v for v in external_votes if v.speaker_id in set(speakers)]
    labels = vote_by_speaker(pooled)
    return {speaker: labels[speaker] for speaker in speakers}
