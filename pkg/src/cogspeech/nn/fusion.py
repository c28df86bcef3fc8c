"""Feature fusion: CNN pooled vector concatenated with a frozen external
embedding, classified by a one-hidden-layer feed-forward head. Used standalone
(head only) and jointly with the conv trunk for the fusion ensemble."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogspeech.errors import ValidationError
from cogspeech.nn.cnn import (
    CnnSpec,
    ConvTrunk,
    TrainConfig,
    MOMENTUM,
    _dropout_mask,
    check_dataset,
    glorot_uniform,
    init_trunk,
    softmax,
    trunk_backward,
    trunk_forward,
)


@dataclass(frozen=True)
class FusionSpec:
    cnn: CnnSpec
    embed_dim: int
    hidden_units: int = 64

    def __post_init__(self):
        if self.embed_dim < 0:
            raise ValidationError("embed_dim must be >= 0")
        if self.hidden_units < 1:
            raise ValidationError("hidden_units must be >= 1")

    @property
    def input_dim(self) -> int:
        return self.cnn.pooled_dim + self.embed_dim


@dataclass
class FusionHead:
    w1: np.ndarray  # (pooled + embed, hidden)
    b1: np.ndarray
    w2: np.ndarray  # (hidden, classes)
    b2: np.ndarray

    def param_arrays(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2]


@dataclass
class FusionModel:
    spec: FusionSpec
    trunk: ConvTrunk
    head: FusionHead

    def param_arrays(self) -> list[np.ndarray]:
        return self.trunk.param_arrays() + self.head.param_arrays()


def init_head(spec: FusionSpec, rng: np.random.Generator) -> FusionHead:
    classes = spec.cnn.output_classes
    return FusionHead(
        w1=glorot_uniform(rng, (spec.input_dim, spec.hidden_units), spec.input_dim, spec.hidden_units),
        b1=np.zeros(spec.hidden_units),
        w2=glorot_uniform(rng, (spec.hidden_units, classes), spec.hidden_units, classes),
        b2=np.zeros(classes),
    )


def init_fusion(spec: FusionSpec, rng: np.random.Generator) -> FusionModel:
    return FusionModel(spec=spec, trunk=init_trunk(spec.cnn, rng), head=init_head(spec, rng))


def fusion_forward(pooled: np.ndarray, embedding: np.ndarray, head: FusionHead) -> np.ndarray:
    """Class probabilities from a pooled CNN vector plus an external embedding."""
    concat = np.concatenate([pooled, embedding])
    if concat.shape[0] != head.w1.shape[0]:
        raise ValidationError(
            f"fusion input dimension {concat.shape[0]} does not match head "
            f"({head.w1.shape[0]}); check the embedding dimension"
        )
    hidden = np.maximum(concat @ head.w1 + head.b1, 0.0)
    return softmax(hidden @ head.w2 + head.b2)


def fusion_model_forward(
    model: FusionModel,
    x: np.ndarray,
    embedding: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    pooled, _ = trunk_forward(model.trunk, x)
    if train_mode and model.spec.cnn.dropout_rate > 0.0:
        if rng is None:
            raise ValidationError("train_mode forward requires an rng for dropout")
        pooled = pooled * _dropout_mask(model.spec.cnn, rng)
    return fusion_forward(pooled, embedding, model.head)


def head_sample_grads(head: FusionHead, concat: np.ndarray, y: int):
    """Loss and head gradients for a fixed concatenated input; also returns
    the gradient w.r.t. the input so trunk training can continue the chain."""
    pre_hidden = concat @ head.w1 + head.b1
    hidden = np.maximum(pre_hidden, 0.0)
    probs = softmax(hidden @ head.w2 + head.b2)
    loss = -np.log(max(probs[y], 1e-300))

    d_logits = probs.copy()
    d_logits[y] -= 1.0
    d_w2 = np.outer(hidden, d_logits)
    d_b2 = d_logits
    d_hidden = head.w2 @ d_logits
    d_pre = d_hidden * (pre_hidden > 0.0)
    d_w1 = np.outer(concat, d_pre)
    d_b1 = d_pre
    d_concat = head.w1 @ d_pre
    return loss, [d_w1, d_b1, d_w2, d_b2], d_concat


def fusion_sample_grads(
    model: FusionModel,
    x: np.ndarray,
    embedding: np.ndarray,
    y: int,
    dropout_mask: np.ndarray | None = None,
):
    """Joint loss/gradients through head and trunk; the embedding is frozen."""
    pooled, cache = trunk_forward(model.trunk, x)
    kept = pooled if dropout_mask is None else pooled * dropout_mask
    concat = np.concatenate([kept, embedding])
    if concat.shape[0] != model.head.w1.shape[0]:
        raise ValidationError(
            f"fusion input dimension {concat.shape[0]} does not match head "
            f"({model.head.w1.shape[0]}); check the embedding dimension"
        )
    loss, head_grads, d_concat = head_sample_grads(model.head, concat, y)
    d_kept = d_concat[: model.spec.cnn.pooled_dim]
    d_pooled = d_kept if dropout_mask is None else d_kept * dropout_mask
    d_filters, d_biases = trunk_backward(model.trunk, cache, d_pooled)
    grads = []
    for df, db in zip(d_filters, d_biases):
        grads.append(df)
        grads.append(db)
    grads.extend(head_grads)
    return loss, grads


def _fusion_array_names(spec: FusionSpec) -> list[str]:
    names = []
    for h in spec.cnn.filter_heights:
        names.append(f"filters_h{h}_w")
        names.append(f"biases_h{h}_b")
    names += ["head_w1_w", "head_b1_b", "head_w2_w", "head_b2_b"]
    return names


def fusion_fit(
    dataset: list[tuple[np.ndarray, np.ndarray, int]],
    spec: FusionSpec,
    cfg: TrainConfig,
) -> tuple[FusionModel, list[float]]:
    """Jointly train trunk and head on (features, frozen embedding, label)."""
    check_dataset([(x, y) for x, _, y in dataset], spec.cnn.input_dim)
    for _, emb, _ in dataset:
        if emb.shape != (spec.embed_dim,):
            raise ValidationError(
                f"embedding shape {emb.shape} does not match embed_dim {spec.embed_dim}"
            )
    rng = np.random.default_rng(cfg.seed)
    model = init_fusion(spec, rng)
    params = model.param_arrays()
    names = _fusion_array_names(spec)
    velocity = [np.zeros_like(p) for p in params]
    losses = []
    n = len(dataset)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = [dataset[i] for i in order[start : start + cfg.batch_size]]
            total_grads = [np.zeros_like(p) for p in params]
            total_loss = 0.0
            for x, emb, y in batch:
                mask = None
                if spec.cnn.dropout_rate > 0.0:
                    mask = _dropout_mask(spec.cnn, rng)
                loss, grads = fusion_sample_grads(model, x, emb, y, mask)
                total_loss += loss
                for acc, g in zip(total_grads, grads):
                    acc += g
            for acc in total_grads:
                acc /= len(batch)
            mean_loss = total_loss / len(batch)
            for arr, name, grad in zip(params, names, total_grads):
                if name.endswith("_w"):
                    mean_loss += 0.5 * cfg.l2 * float(np.sum(arr * arr))
                    grad += cfg.l2 * arr
            if not np.isfinite(mean_loss):
                raise RuntimeError(f"fusion training diverged: loss {mean_loss}")
            for p, v, g in zip(params, velocity, total_grads):
                v *= MOMENTUM
                v -= cfg.learning_rate * g
                p += v
            epoch_loss += mean_loss * len(batch)
        losses.append(epoch_loss / n)
    return model, losses


def fusion_predict(model: FusionModel, x: np.ndarray, embedding: np.ndarray) -> np.ndarray:
    return fusion_model_forward(model, x, embedding, train_mode=False)
