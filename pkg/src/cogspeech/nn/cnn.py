"""Sequence CNN over per-utterance feature rows, trained with momentum SGD.

The network follows the max-over-time text-CNN pattern: parallel filter
banks of heights 2/3/4 spanning the full feature width, ReLU, max pooling
over time, then a dense softmax head. Gradients are derived by hand and
validated against finite differences (see gradcheck).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogspeech.errors import ValidationError

MOMENTUM = 0.9


@dataclass(frozen=True)
class CnnSpec:
    input_dim: int
    filter_heights: tuple[int, ...] = (2, 3, 4)
    filters_per_height: int = 8
    dropout_rate: float = 0.5
    output_classes: int = 2

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValidationError(f"input_dim {self.input_dim} < 1")
        if not self.filter_heights or any(h < 1 for h in self.filter_heights):
            raise ValidationError("filter heights must all be >= 1")
        if self.filters_per_height < 1:
            raise ValidationError("filters_per_height must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValidationError(f"dropout_rate {self.dropout_rate} outside [0, 1)")
        if self.output_classes < 2:
            raise ValidationError("output_classes must be >= 2")

    @property
    def pooled_dim(self) -> int:
        return self.filters_per_height * len(self.filter_heights)

    @property
    def max_height(self) -> int:
        return max(self.filter_heights)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 50
    batch_size: int = 16
    l2: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValidationError("learning_rate, epochs, batch_size must be positive")
        if self.l2 < 0:
            raise ValidationError("l2 must be non-negative")
        if self.seed < 0:
            raise ValidationError("seed must be a non-negative integer")


@dataclass
class ConvTrunk:
    """Filter banks, one (n_filters, height, input_dim) array per height."""

    heights: tuple[int, ...]
    filters: list[np.ndarray]
    biases: list[np.ndarray]

    def param_arrays(self) -> list[np.ndarray]:
        out = []
        for f, b in zip(self.filters, self.biases):
            out.append(f)
            out.append(b)
        return out


@dataclass
class CnnModel:
    spec: CnnSpec
    trunk: ConvTrunk
    dense_w: np.ndarray
    dense_b: np.ndarray

    def param_arrays(self) -> list[np.ndarray]:
        return self.trunk.param_arrays() + [self.dense_w, self.dense_b]


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_trunk(spec: CnnSpec, rng: np.random.Generator) -> ConvTrunk:
    filters = []
    biases = []
    for h in spec.filter_heights:
        filters.append(
            glorot_uniform(
                rng,
                (spec.filters_per_height, h, spec.input_dim),
                fan_in=h * spec.input_dim,
                fan_out=spec.filters_per_height,
            )
        )
        biases.append(np.zeros(spec.filters_per_height))
    return ConvTrunk(heights=tuple(spec.filter_heights), filters=filters, biases=biases)


def init_cnn(spec: CnnSpec, rng: np.random.Generator) -> CnnModel:
    trunk = init_trunk(spec, rng)
    dense_w = glorot_uniform(
        rng, (spec.pooled_dim, spec.output_classes), spec.pooled_dim, spec.output_classes
    )
    dense_b = np.zeros(spec.output_classes)
    return CnnModel(spec=spec, trunk=trunk, dense_w=dense_w, dense_b=dense_b)


def pad_to_height(x: np.ndarray, min_height: int) -> np.ndarray:
    """Zero-pad the tail so every filter fits at least once."""
    if x.shape[0] >= min_height:
        return x
    pad = np.zeros((min_height - x.shape[0], x.shape[1]))
    return np.vstack([x, pad])


def trunk_forward(trunk: ConvTrunk, x: np.ndarray):
    """Pooled feature vector plus the cache needed for the backward pass."""
    d = x.shape[1]
    if trunk.filters[0].shape[2] != d:
        raise ValidationError(
            f"input width {d} does not match filter width {trunk.filters[0].shape[2]}"
        )
    x = pad_to_height(x, max(trunk.heights))
    t_len = x.shape[0]
    pooled_parts = []
    caches = []
    for h, bank, bias in zip(trunk.heights, trunk.filters, trunk.biases):
        n_positions = t_len - h + 1
        # windows: (n_positions, h, d) view of x
        windows = np.lib.stride_tricks.sliding_window_view(x, (h, d)).reshape(
            n_positions, h, d
        )
        maps = np.einsum("phd,fhd->fp", windows, bank) + bias[:, None]
        activated = np.maximum(maps, 0.0)
        argmax = np.argmax(activated, axis=1)
        pooled = activated[np.arange(bank.shape[0]), argmax]
        pooled_parts.append(pooled)
        caches.append((windows, maps, argmax))
    return np.concatenate(pooled_parts), (x, caches)


def conv_forward(x: np.ndarray, trunk: ConvTrunk) -> np.ndarray:
    """Valid cross-correlation, ReLU, max-over-time; one scalar per filter."""
    pooled, _ = trunk_forward(trunk, x)
    return pooled


def trunk_backward(trunk: ConvTrunk, cache, d_pooled: np.ndarray):
    """Gradients of the filter banks given d(loss)/d(pooled)."""
    x, caches = cache
    d_filters = []
    d_biases = []
    offset = 0
    for h, bank, (windows, maps, argmax) in zip(trunk.heights, trunk.filters, caches):
        n_f = bank.shape[0]
        d_pool = d_pooled[offset : offset + n_f]
        offset += n_f
        df = np.zeros_like(bank)
        db = np.zeros(n_f)
        for f in range(n_f):
            t_star = argmax[f]
            if maps[f, t_star] > 0.0:
                df[f] = d_pool[f] * windows[t_star]
                db[f] = d_pool[f]
        d_filters.append(df)
        d_biases.append(db)
    return d_filters, d_biases


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / exp.sum()


def cnn_forward(
    x: np.ndarray,
    model: CnnModel,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Class probabilities for one T x d input. Dropout only in train mode."""
    pooled, _ = trunk_forward(model.trunk, x)
    if train_mode and model.spec.dropout_rate > 0.0:
        if rng is None:
            raise ValidationError("train_mode forward requires an rng for dropout")
        mask = _dropout_mask(model.spec, rng)
        pooled = pooled * mask
    logits = pooled @ model.dense_w + model.dense_b
    probs = softmax(logits)
    if not np.all(np.isfinite(probs)):
        raise ValidationError("non-finite probabilities; check model parameters")
    return probs


def _dropout_mask(spec: CnnSpec, rng: np.random.Generator) -> np.ndarray:
    keep = 1.0 - spec.dropout_rate
    return (rng.random(spec.pooled_dim) < keep).astype(np.float64) / keep


def cnn_sample_grads(
    model: CnnModel, x: np.ndarray, y: int, dropout_mask: np.ndarray | None = None
):
    """Cross-entropy loss and per-parameter gradients for one sample."""
    pooled, cache = trunk_forward(model.trunk, x)
    kept = pooled if dropout_mask is None else pooled * dropout_mask
    logits = kept @ model.dense_w + model.dense_b
    probs = softmax(logits)
    loss = -np.log(max(probs[y], 1e-300))

    d_logits = probs.copy()
    d_logits[y] -= 1.0
    d_dense_w = np.outer(kept, d_logits)
    d_dense_b = d_logits
    d_kept = model.dense_w @ d_logits
    d_pooled = d_kept if dropout_mask is None else d_kept * dropout_mask
    d_filters, d_biases = trunk_backward(model.trunk, cache, d_pooled)

    grads = []
    for df, db in zip(d_filters, d_biases):
        grads.append(df)
        grads.append(db)
    grads.append(d_dense_w)
    grads.append(d_dense_b)
    return loss, grads


def _l2_penalty_and_add(model_arrays, weight_names, grads, l2: float) -> float:
    """Add l2*w to weight gradients in place; return the penalty value."""
    penalty = 0.0
    for arr, name, grad in zip(model_arrays, weight_names, grads):
        if name.endswith("_w"):
            penalty += 0.5 * l2 * float(np.sum(arr * arr))
            grad += l2 * arr
    return penalty


def _cnn_array_names(spec: CnnSpec) -> list[str]:
    names = []
    for h in spec.filter_heights:
        names.append(f"filters_h{h}_w")
        names.append(f"biases_h{h}_b")
    names += ["dense_w", "dense_b"]
    return names


def cnn_batch_grads(
    model: CnnModel,
    batch: list[tuple[np.ndarray, int]],
    l2: float,
    rng: np.random.Generator | None,
):
    """Mean loss and gradients over a batch, with dropout and L2."""
    params = model.param_arrays()
    total_grads = [np.zeros_like(p) for p in params]
    total_loss = 0.0
    for x, y in batch:
        mask = None
        if rng is not None and model.spec.dropout_rate > 0.0:
            mask = _dropout_mask(model.spec, rng)
        loss, grads = cnn_sample_grads(model, x, y, mask)
        total_loss += loss
        for acc, g in zip(total_grads, grads):
            acc += g
    n = len(batch)
    for acc in total_grads:
        acc /= n
    mean_loss = total_loss / n
    mean_loss += _l2_penalty_and_add(params, _cnn_array_names(model.spec), total_grads, l2)
    return mean_loss, total_grads


def check_dataset(dataset, input_dim: int):
    if len(dataset) < 2:
        raise ValidationError("need at least 2 training samples")
    labels = {y for _, y in dataset}
    if len(labels) < 2:
        raise ValidationError("training data must contain both classes")
    for x, _ in dataset:
        if x.ndim != 2 or x.shape[1] != input_dim:
            raise ValidationError(
                f"sample shape {x.shape} does not match input_dim {input_dim}"
            )


def cnn_fit(
    dataset: list[tuple[np.ndarray, int]], spec: CnnSpec, cfg: TrainConfig
) -> tuple[CnnModel, list[float]]:
    """Mini-batch momentum SGD; the seed fixes init, batch order, and dropout."""
    check_dataset(dataset, spec.input_dim)
    rng = np.random.default_rng(cfg.seed)
    model = init_cnn(spec, rng)
    params = model.param_arrays()
    velocity = [np.zeros_like(p) for p in params]
    losses = []
    n = len(dataset)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = [dataset[i] for i in order[start : start + cfg.batch_size]]
            loss, grads = cnn_batch_grads(model, batch, cfg.l2, rng)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: loss {loss} (lr={cfg.learning_rate}, l2={cfg.l2})"
                )
            for p, v, g in zip(params, velocity, grads):
                v *= MOMENTUM
                v -= cfg.learning_rate * g
                p += v
            epoch_loss += loss * len(batch)
        losses.append(epoch_loss / n)
    return model, losses


def cnn_predict(model: CnnModel, x: np.ndarray) -> np.ndarray:
    """Deterministic evaluation-mode probabilities."""
    return cnn_forward(x, model, train_mode=False)
