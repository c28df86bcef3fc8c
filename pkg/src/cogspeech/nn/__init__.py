"""Minimal neural toolkit: text CNN, fusion head, logistic regression."""

from cogspeech.nn.cnn import (
    CnnModel,
    CnnSpec,
    ConvTrunk,
    TrainConfig,
    cnn_fit,
    cnn_forward,
    cnn_predict,
    cnn_sample_grads,
    conv_forward,
    init_cnn,
    init_trunk,
    softmax,
)
from cogspeech.nn.fusion import (
    FusionHead,
    FusionModel,
    FusionSpec,
    fusion_fit,
    fusion_forward,
    fusion_model_forward,
    fusion_predict,
    head_sample_grads,
    init_fusion,
    init_head,
)
from cogspeech.nn.gradcheck import grad_check
from cogspeech.nn.logistic import (
    LogisticModel,
    logistic_fit,
    logistic_objective,
    logistic_predict,
    logistic_predict_batch,
)
from cogspeech.nn.serialize import load_model, save_model

__all__ = [
    "CnnModel",
    "CnnSpec",
    "ConvTrunk",
    "TrainConfig",
    "cnn_fit",
    "cnn_forward",
    "cnn_predict",
    "cnn_sample_grads",
    "conv_forward",
    "init_cnn",
    "init_trunk",
    "softmax",
    "FusionHead",
    "FusionModel",
    "FusionSpec",
    "fusion_fit",
    "fusion_forward",
    "fusion_model_forward",
    "fusion_predict",
    "head_sample_grads",
    "init_fusion",
    "init_head",
    "grad_check",
    "LogisticModel",
    "logistic_fit",
    "logistic_objective",
    "logistic_predict",
    "logistic_predict_batch",
    "load_model",
    "save_model",
]
