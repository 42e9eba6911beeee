"""
Synthetic data sources for the scaling experiments.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from ..core.exceptions import InvalidValueError


@dataclass(frozen=True)
class HypercubeSource:
    """Points drawn uniformly from [0, 1]^D."""
    dimension: int
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 1:
            raise InvalidValueError(f"dimension must be >= 1, got {self.dimension}")


@dataclass(frozen=True)
class GaussianComponent:
    mean: np.ndarray
    covariance: np.ndarray
    weight: float


@dataclass(frozen=True)
class GaussianMixtureSource:
    """Mixture of Gaussians with arbitrary size and orientation."""
    components: List[GaussianComponent] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def create(cls, means: Sequence, covariances: Sequence, weights: Sequence[float],
               seed: int = 0) -> "GaussianMixtureSource":
        if not (len(means) == len(covariances) == len(weights)):
            raise InvalidValueError("means, covariances and weights must have the same length")
        components = [
            GaussianComponent(np.asarray(m, dtype=np.float64), np.asarray(c, dtype=np.float64), float(w))
            for m, c, w in zip(means, covariances, weights)
        ]
        return cls(components=components, seed=seed)

    @property
    def dimension(self) -> int:
        return int(self.components[0].mean.shape[0])

    def validate(self):
        if not self.components:
            raise InvalidValueError("a mixture needs at least one component")
        weights = np.array([c.weight for c in self.components])
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-9):
            raise InvalidValueError(f"mixture weights must be non-negative and sum to 1, got {weights.sum()}")
        dimension = self.dimension
        for i, component in enumerate(self.components):
            cov = component.covariance
            if component.mean.shape != (dimension,) or cov.shape != (dimension, dimension):
                raise InvalidValueError(f"component {i} does not match dimension {dimension}")
            if not np.allclose(cov, cov.T):
                raise InvalidValueError(f"component {i} covariance is not symmetric")
            if np.linalg.eigvalsh(cov).min() < -1e-10:
                raise InvalidValueError(f"component {i} covariance is not positive semi-definite")


SyntheticSource = Union[HypercubeSource, GaussianMixtureSource]


def source_rng(source: SyntheticSource, stream: int = 0) -> np.random.Generator:
    """Independent generator per (seed, stream); stream 0 trains, stream 1 queries."""
    return np.random.default_rng([source.seed, stream])


def _covariance_factor(cov: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(cov)
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def generate(source: SyntheticSource, n: int, stream: int = 0) -> np.ndarray:
    """n positions from `source`, deterministic given its seed and the stream."""
    if n < 1:
        raise InvalidValueError(f"n must be >= 1, got {n}")
    rng = source_rng(source, stream)
    if isinstance(source, HypercubeSource):
        return rng.random((n, source.dimension))

    source.validate()
    weights = np.array([c.weight for c in source.components])
    picks = rng.choice(len(source.components), size=n, p=weights / weights.sum())
    noise = rng.standard_normal((n, source.dimension))
    points = np.empty((n, source.dimension), dtype=np.float64)
    for i, component in enumerate(source.components):
        rows = picks == i
        factor = _covariance_factor(component.covariance)
        points[rows] = component.mean + noise[rows] @ factor.T
    return points


def random_mixture(dimension: int, components: int = 5, seed: int = 0) -> GaussianMixtureSource:
    """
    Mixture with means in the unit hypercube, random orientations and
    per-axis scales between 0.01 and 0.2, equal weights.
    """
    if dimension < 1 or components < 1:
        raise InvalidValueError("dimension and components must be >= 1")
    rng = np.random.default_rng([seed, 2])
    means, covariances = [], []
    for _ in range(components):
        rotation, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
        scales = rng.uniform(0.01, 0.2, size=dimension)
        covariances.append((rotation * scales ** 2) @ rotation.T)
        means.append(rng.random(dimension))
    covariances = [(c + c.T) / 2 for c in covariances]
    return GaussianMixtureSource.create(means, covariances, [1.0 / components] * components, seed=seed)
