"""Randomization domains: anything the optimizer can draw plants from.

A domain is duck-typed: it exposes `n_x`, `n_u`, and `sample(rng)` returning
a PlantSample.  The cart-pole domain of the experiments lives in
`cartpole.CartpoleDomain`; the discrete domains here back the scalar test
instances and the discounted wrapper used by annealing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .lqr import PlantSample


@runtime_checkable
class Domain(Protocol):
    @property
    def n_x(self) -> int: ...

    @property
    def n_u(self) -> int: ...

    def sample(self, rng: np.random.Generator) -> PlantSample: ...


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Uniform distribution over a finite list of plants."""

    plants: tuple[PlantSample, ...]

    def __post_init__(self):
        plants = tuple(self.plants)
        if not plants:
            raise ValueError("DiscreteDomain needs at least one plant")
        object.__setattr__(self, "plants", plants)

    @property
    def n_x(self) -> int:
        return self.plants[0].n_x

    @property
    def n_u(self) -> int:
        return self.plants[0].n_u

    def sample(self, rng: np.random.Generator) -> PlantSample:
        return self.plants[int(rng.integers(len(self.plants)))]

    def sample_batch(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
        idx = rng.integers(len(self.plants), size=count)
        a_stack = np.stack([self.plants[i].A for i in idx])
        b_stack = np.stack([self.plants[i].B for i in idx])
        return a_stack, b_stack


def scale_plant(theta: PlantSample, gamma: float) -> PlantSample:
    """(sqrt(gamma) A, sqrt(gamma) B): the gamma-discounted dynamics.

    The discounted cost-to-go recursion P = Q_K + gamma A_cl^T P A_cl is
    exactly the undiscounted recursion of the sqrt(gamma)-scaled pair.
    """
    root = math.sqrt(gamma)
    return PlantSample(A=root * theta.A, B=root * theta.B)


@dataclass(frozen=True, eq=False)
class DiscountedDomain:
    """A base domain with sqrt(gamma)-scaled draws."""

    base: Domain
    gamma: float

    @property
    def n_x(self) -> int:
        return self.base.n_x

    @property
    def n_u(self) -> int:
        return self.base.n_u

    def sample(self, rng: np.random.Generator) -> PlantSample:
        return scale_plant(self.base.sample(rng), self.gamma)

    def sample_batch(self, rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
        sb = getattr(self.base, "sample_batch", None)
        if sb is not None:
            a_stack, b_stack = sb(rng, count)
        else:
            draws = [self.base.sample(rng) for _ in range(count)]
            a_stack = np.stack([t.A for t in draws])
            b_stack = np.stack([t.B for t in draws])
        root = math.sqrt(self.gamma)
        return root * a_stack, root * b_stack
