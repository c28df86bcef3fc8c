"""Training independently seeded model instances, optionally in parallel."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

from cogspeech.errors import ToolkitError
from cogspeech.ensemble.types import BagSpec

T = TypeVar("T")


class BagInstanceError(ToolkitError):
    """One instance of a bag failed; carries which one and why."""

    def __init__(self, instance_id: int, cause: BaseException):
        super().__init__(f"bag instance {instance_id} failed: {cause}")
        self.instance_id = instance_id
        self.cause = cause


def train_bag(
    fit_fn: Callable[[int], T], bag: BagSpec, jobs: int = 1
) -> list[T]:
    """Call fit_fn(seed) once per instance; result order is instance order.

    fit_fn must be picklable (a module-level function or functools.partial
    over one) when jobs > 1. Instance i uses seed base_seed XOR i.
    """
    seeds = [bag.instance_seed(i) for i in range(bag.n_instances)]
    if jobs <= 1 or bag.n_instances == 1:
        results = []
        for i, seed in enumerate(seeds):
            try:
                results.append(fit_fn(seed))
            except Exception as exc:
                raise BagInstanceError(i, exc) from exc
        return results
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fit_fn, seed) for seed in seeds]
        results = []
        for i, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as exc:
                raise BagInstanceError(i, exc) from exc
        return results
