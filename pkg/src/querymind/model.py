"""Pairwise-choice preference model, bimodal parameter prior, and grid carriers.

The responder prefers items close to an ideal point ``theta``.  A query shows
two items; the answer ``y = 1`` means the second item was preferred.  Choice
noise is logistic in the reward difference, so the probability of preferring
the second item is ``sigmoid(r(x2) - r(x1))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ABSOLUTE_DISTANCE = "absolute_distance"
SQUARED_DISTANCE = "squared_distance"
REWARD_FORMS = (ABSOLUTE_DISTANCE, SQUARED_DISTANCE)

# Densities below this are treated as exact zeros before renormalization.
DENSITY_FLOOR = 1e-300

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class InvalidInputError(ValueError):
    """An argument is non-finite or violates a parameter constraint."""


class DegenerateBeliefError(RuntimeError):
    """Every grid point underflowed; the belief cannot be normalized."""


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value!r}")


def _require_form(form: str) -> None:
    if form not in REWARD_FORMS:
        raise InvalidInputError(f"unknown reward form {form!r}; expected one of {REWARD_FORMS}")


@dataclass(frozen=True)
class Query:
    """An ordered pair of item features shown to the responder."""

    x1: float
    x2: float

    def __post_init__(self) -> None:
        _require_finite(x1=self.x1, x2=self.x2)

    @property
    def is_diagonal(self) -> bool:
        return self.x1 == self.x2

    def swapped(self) -> "Query":
        return Query(self.x2, self.x1)


@dataclass(frozen=True)
class LabeledExample:
    """A query together with a binary answer; ``y = 1`` prefers ``x2``."""

    query: Query
    y: int

    def __post_init__(self) -> None:
        if self.y not in (0, 1):
            raise InvalidInputError(f"answer must be 0 or 1, got {self.y!r}")


@dataclass(frozen=True)
class ThetaGrid:
    """Uniform discretization of the ideal-point axis."""

    lo: float
    hi: float
    n_points: int

    def __post_init__(self) -> None:
        _require_finite(lo=self.lo, hi=self.hi)
        if not self.lo < self.hi:
            raise InvalidInputError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.n_points < 3:
            raise InvalidInputError(f"grid needs at least 3 points, got {self.n_points}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_points)

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / (self.n_points - 1)

    def index_of(self, theta: float) -> int:
        """Index of the grid cell containing ``theta`` (nearest point)."""
        _require_finite(theta=theta)
        idx = int(round((theta - self.lo) / self.cell_width))
        if idx < 0 or idx >= self.n_points:
            raise InvalidInputError(f"theta {theta} outside grid [{self.lo}, {self.hi}]")
        return idx


@dataclass(frozen=True)
class BeliefParams:
    """Two-component Gaussian mixture over the ideal point.

    ``p_z`` is the weight of the first component.  Canonical form orders the
    means as ``mu1 <= mu2`` so that mixtures differing only by component
    relabeling compare equal after :func:`canonicalize`.
    """

    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    p_z: float

    def __post_init__(self) -> None:
        _require_finite(mu1=self.mu1, sigma1=self.sigma1, mu2=self.mu2,
                        sigma2=self.sigma2, p_z=self.p_z)
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise InvalidInputError(
                f"standard deviations must be positive, got {self.sigma1}, {self.sigma2}")
        if not 0.0 <= self.p_z <= 1.0:
            raise InvalidInputError(f"p_z must be in [0, 1], got {self.p_z}")

    @property
    def is_canonical(self) -> bool:
        return self.mu1 <= self.mu2

    def astuple(self) -> tuple[float, float, float, float, float]:
        return (self.mu1, self.sigma1, self.mu2, self.sigma2, self.p_z)


@dataclass(frozen=True)
class GridBelief:
    """Probability mass over a :class:`ThetaGrid`."""

    grid: ThetaGrid
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        object.__setattr__(self, "mass", mass)
        if mass.shape != (self.grid.n_points,):
            raise InvalidInputError(
                f"mass has shape {mass.shape}, grid has {self.grid.n_points} points")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise InvalidInputError("mass entries must be finite and nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"mass must sum to 1 within 1e-9, got {total!r}")


def reward(theta: float, x: float, form: str = ABSOLUTE_DISTANCE) -> float:
    """Distance-based reward of item ``x`` under ideal point ``theta`` (<= 0)."""
    _require_finite(theta=theta, x=x)
    _require_form(form)
    if form == ABSOLUTE_DISTANCE:
        return -abs(x - theta)
    return -((x - theta) ** 2)


def _sigmoid(d: float) -> float:
    if d >= 0.0:
        return 1.0 / (1.0 + math.exp(-d))
    e = math.exp(d)
    return e / (1.0 + e)


def response_prob(theta: float, q: Query, form: str = ABSOLUTE_DISTANCE) -> float:
    """Probability of answering ``y = 1`` (prefer ``x2``) given ``theta``."""
    return _sigmoid(reward(theta, q.x2, form) - reward(theta, q.x1, form))


def sample_answer(theta: float, q: Query, form: str, rng: np.random.Generator) -> int:
    """Draw one answer from the choice model; deterministic given the generator state."""
    return 1 if rng.random() < response_prob(theta, q, form) else 0


def mixture_density(bp: BeliefParams, theta):
    """Mixture density at ``theta`` (scalar or array)."""
    th = np.asarray(theta, dtype=np.float64)
    z1 = (th - bp.mu1) / bp.sigma1
    z2 = (th - bp.mu2) / bp.sigma2
    d1 = _INV_SQRT_2PI / bp.sigma1 * np.exp(-0.5 * z1 * z1)
    d2 = _INV_SQRT_2PI / bp.sigma2 * np.exp(-0.5 * z2 * z2)
    out = bp.p_z * d1 + (1.0 - bp.p_z) * d2
    if np.ndim(theta) == 0:
        return float(out)
    return out


def discretize_belief(bp: BeliefParams, grid: ThetaGrid) -> GridBelief:
    """Evaluate the mixture on the grid and renormalize to a discrete distribution.

    Grid mass is treated as cell probabilities, not density samples, so the
    result sums to one regardless of cell width.  Densities below
    ``DENSITY_FLOOR`` are zeroed before normalizing; if everything underflows
    the belief is unrepresentable on this grid.
    """
    density = mixture_density(bp, grid.points)
    density = np.where(density < DENSITY_FLOOR, 0.0, density)
    total = density.sum()
    if total <= 0.0:
        raise DegenerateBeliefError(
            f"mixture {bp.astuple()} has no representable mass on [{grid.lo}, {grid.hi}]")
    return GridBelief(grid, density / total)


def canonicalize(bp: BeliefParams) -> BeliefParams:
    """Order components by mean; the induced density is pointwise unchanged."""
    if bp.mu1 <= bp.mu2:
        return bp
    return BeliefParams(bp.mu2, bp.sigma2, bp.mu1, bp.sigma1, 1.0 - bp.p_z)


def uniform_belief(grid: ThetaGrid) -> GridBelief:
    """Uniform mass over every grid cell."""
    return GridBelief(grid, np.full(grid.n_points, 1.0 / grid.n_points))
