"""Exact zero-order-hold discretization for one sampling period.

Each step recomputes F = e^(A h) and G = h*phi(A h)*B from the series
operator; there is no caching or interpolation over h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matseries import SeriesOptions, phi
from .plant import MotorParams, continuous_matrices

# smallest sampling period the controller accepts (the h -> 0 singularity floor)
DEFAULT_EPS_H = 1e-4


class SamplingTooSmallError(ValueError):
    """Raised when a requested period is below the sampling floor eps_h."""


@dataclass(frozen=True)
class DiscreteModel:
    """One-step model x[k+1] = F x[k] + G u[k] for period h."""

    F: np.ndarray
    G: np.ndarray
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be > 0, got {self.h}")
        if not (np.all(np.isfinite(self.F)) and np.all(np.isfinite(self.G))):
            raise ValueError("F and G must be finite")


def discretize_lti(A, B, h: float, options: SeriesOptions | None = None) -> DiscreteModel:
    """ZOH-discretize an arbitrary LTI pair: F = I + Ah*phi(Ah), G = h*phi(Ah)*B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Ah = A * h
    ph = phi(Ah, options)
    F = np.eye(A.shape[0]) + Ah @ ph
    G = h * ph @ B
    return DiscreteModel(F=F, G=G, h=h)


def discretize(p: MotorParams, h: float, eps_h: float = DEFAULT_EPS_H,
               options: SeriesOptions | None = None) -> DiscreteModel:
    """Discrete motor model for sampling period h (h >= eps_h enforced)."""
    if h < eps_h:
        raise SamplingTooSmallError(f"h = {h} is below the sampling floor eps_h = {eps_h}")
    A, B = continuous_matrices(p)
    return discretize_lti(A, B, h, options)


def rotational_row(m: DiscreteModel) -> np.ndarray:
    """The omega row of F: F_m x[k] is the input-free one-step omega predictor."""
    return np.array(m.F[1])
