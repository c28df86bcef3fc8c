"""Bagging, voting, feature fusion, and stacking over prediction vectors."""

from cogspeech.ensemble.bagging import BagInstanceError, train_bag
from cogspeech.ensemble.external import (
    ExternalPredictions,
    embeddings_by_speaker,
    embeddings_to_jsonl,
    predictions_to_jsonl,
    read_external_embeddings,
    read_external_predictions,
)
from cogspeech.ensemble.stacking import (
    DEFAULT_MODEL_ORDER,
    Scaler,
    StackArtifacts,
    audit_out_of_fold,
    external_oof,
    meta_features,
    stack_fit,
    stack_meta_cv,
    stack_predict,
)
from cogspeech.ensemble.types import BagSpec, ExternalEmbedding, PredictionVector
from cogspeech.ensemble.voting import majority_vote, model_a_predict, vote_by_speaker

__all__ = [
    "BagInstanceError",
    "train_bag",
    "ExternalPredictions",
    "embeddings_by_speaker",
    "embeddings_to_jsonl",
    "predictions_to_jsonl",
    "read_external_embeddings",
    "read_external_predictions",
    "DEFAULT_MODEL_ORDER",
    "Scaler",
    "StackArtifacts",
    "audit_out_of_fold",
    "external_oof",
    "meta_features",
    "stack_fit",
    "stack_meta_cv",
    "stack_predict",
    "BagSpec",
    "ExternalEmbedding",
    "PredictionVector",
    "majority_vote",
    "model_a_predict",
    "vote_by_speaker",
]
