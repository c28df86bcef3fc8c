"""Central finite-difference verification of analytic gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

FD_STEP = 1e-4
N_SAMPLED_PARAMS = 200


def grad_check(
    loss_fn: Callable[[], float],
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    rng: np.random.Generator,
    n_samples: int = N_SAMPLED_PARAMS,
    step: float = FD_STEP,
) -> float:
    """Max relative error between analytic gradients and central differences.

    loss_fn recomputes the loss from the live parameter arrays, which are
    perturbed in place and restored. Samples n_samples random coordinates
    (all of them when the model is smaller than that). Relative error uses
    max(1, |numeric|) in the denominator so near-zero gradients compare
    absolutely.
    """
    coords = [(i, j) for i, arr in enumerate(params) for j in range(arr.size)]
    if len(coords) > n_samples:
        picked = rng.choice(len(coords), size=n_samples, replace=False)
        coords = [coords[k] for k in picked]
    worst = 0.0
    for arr_index, flat_index in coords:
        flat = params[arr_index].reshape(-1)
        original = flat[flat_index]
        flat[flat_index] = original + step
        loss_plus = loss_fn()
        flat[flat_index] = original - step
        loss_minus = loss_fn()
        flat[flat_index] = original
        numeric = (loss_plus - loss_minus) / (2.0 * step)
        analytic = grads[arr_index].reshape(-1)[flat_index]
        error = abs(analytic - numeric) / max(1.0, abs(numeric))
        worst = max(worst, error)
    return worst
