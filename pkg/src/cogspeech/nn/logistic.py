"""L2-regularized logistic regression fit by accelerated full-batch descent.

Objective: mean cross-entropy + (l2/2)||w||^2, bias unregularized. The mean
(rather than sum) makes predictions invariant to duplicating every row.
Nesterov momentum with a 1/L step and function-value restarts reaches the
gradient tolerance where plain descent would stall at small l2; the problem
is convex, so the optimum is unique and seed-independent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cogspeech.errors import ValidationError

GRAD_TOL = 1e-6
MAX_ITER = 10_000


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValidationError("logistic model parameters must be finite")


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_objective(X, y, w, b, l2) -> float:
    z = X @ w + b
    # softplus(z) - y*z, computed stably
    ce = np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))
    return float(ce.mean() + 0.5 * l2 * np.dot(w, w))


def logistic_gradient(X, y, w, b, l2):
    p = _stable_sigmoid(X @ w + b)
    residual = p - y
    gw = X.T @ residual / len(y) + l2 * w
    gb = float(residual.mean())
    return gw, gb


def logistic_fit(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-4,
    seed: int = 0,
    max_iter: int = MAX_ITER,
    tol: float = GRAD_TOL,
) -> LogisticModel:
    """Fit to convergence (gradient inf-norm < tol) or max_iter sweeps.

    seed is accepted for interface uniformity; the convex objective makes the
    result seed-independent (initialization is always zero).
    """
    del seed
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValidationError("X must be n x m with one label per row")
    if len(X) < 2 or len(set(y.tolist())) < 2:
        raise ValidationError("training data must contain both classes")

    n, m = X.shape
    design = np.hstack([X, np.ones((n, 1))])
    lipschitz = float(np.linalg.norm(design, 2)) ** 2 / (4.0 * n) + l2
    step = 1.0 / lipschitz
    strong = l2 > 0.0
    if strong:
        beta = (np.sqrt(lipschitz) - np.sqrt(l2)) / (np.sqrt(lipschitz) + np.sqrt(l2))

    w = np.zeros(m)
    b = 0.0
    prev_w, prev_b = w.copy(), b
    t_cur = 1.0
    for _ in range(max_iter):
        if strong:
            momentum = beta
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_cur * t_cur))
            momentum = (t_cur - 1.0) / t_next
            t_cur = t_next
        look_w = w + momentum * (w - prev_w)
        look_b = b + momentum * (b - prev_b)
        gw, gb = logistic_gradient(X, y, look_w, look_b, l2)
        new_w = look_w - step * gw
        new_b = look_b - step * gb
        if logistic_objective(X, y, new_w, new_b, l2) > logistic_objective(X, y, w, b, l2):
            # momentum overshot: restart from a plain descent step
            gw, gb = logistic_gradient(X, y, w, b, l2)
            new_w = w - step * gw
            new_b = b - step * gb
            prev_w, prev_b = new_w.copy(), new_b
            t_cur = 1.0
        else:
            prev_w, prev_b = w, b
        w, b = new_w, new_b
        gw, gb = logistic_gradient(X, y, w, b, l2)
        if max(float(np.max(np.abs(gw))), abs(gb)) < tol:
            break
    return LogisticModel(weights=w, bias=b, l2=l2)


def logistic_predict(model: LogisticModel, x: np.ndarray) -> np.ndarray:
    """[p_class0, p_class1] for one feature vector."""
    p1 = float(_stable_sigmoid(np.atleast_1d(x @ model.weights + model.bias))[0])
    return np.array([1.0 - p1, p1])


def logistic_predict_batch(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    p1 = _stable_sigmoid(X @ model.weights + model.bias)
    return np.column_stack([1.0 - p1, p1])
