"""Lyapunov candidate, its discrete forward rate, the stability inequality
with its V1/V2 decomposition, the period boundary conditions, and grid
sweeps of the V1 margin over (h, |omega|).

Sign conventions: the decomposition is stated with A* = -A and F*_m = -F_m;
the public API works with A and F_m only and applies the stars internally.
V2 is a componentwise vector inequality; all three components are required
and the worst-component margin is reported so weaker readings stay possible.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .controller import GainSet
from .discretizer import DiscreteModel, discretize, rotational_row
from .plant import DesiredState, MotorParams, PlantState, continuous_matrices, energy, energy_rate


@dataclass(frozen=True)
class LyapunovSample:
    """Diagnostics for one (state, input, period) sample."""

    V: float
    V_prime: float
    condition_main: bool      # V' <= 0
    V1_ok: bool
    V2_ok: bool
    boundary_low_ok: bool     # h -> 0 condition
    boundary_high_ok: bool    # h -> inf condition
    v1_margin: float          # V1 left-hand side (stable when <= 0)
    v2_margin: float          # max component of B u + A x (stable when <= 0)


@dataclass(frozen=True)
class StabilityGrid:
    axis1_name: str
    axis1_values: np.ndarray
    axis2_name: str
    axis2_values: np.ndarray
    margins: np.ndarray  # shape (len(axis1), len(axis2)), V1 left-hand side

    def __post_init__(self):
        if self.margins.shape != (len(self.axis1_values), len(self.axis2_values)):
            raise ValueError("margins shape does not match the axes")

    def stable_count(self) -> int:
        return int(np.sum(self.margins <= 0.0))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["axis1", "axis2", "V1_margin"])
            for i, a1 in enumerate(self.axis1_values):
                for j, a2 in enumerate(self.axis2_values):
                    w.writerow([repr(float(a1)), repr(float(a2)), repr(float(self.margins[i, j]))])


def lyapunov(x: PlantState, d: DesiredState, E: float, gains: GainSet, k_E_used: float) -> float:
    """V = 0.5 k_E E^2 + 0.5 k_D (omega - omega_d)^2 + 0.5 k_P (theta - theta_d)^2."""
    return (0.5 * k_E_used * E * E
            + 0.5 * gains.k_D * (x.omega - d.omega_d) ** 2
            + 0.5 * gains.k_P * (x.theta - d.theta_d) ** 2)


def v_prime(x: PlantState, d: DesiredState, u: float, model: DiscreteModel,
            gains: GainSet, k_E_used: float, p: MotorParams) -> float:
    """Discrete forward Lyapunov rate.

    V' = k_E E_k [x^T D phi(A h)(A x + B u)]
         + (k_D/h)(omega - omega_d)(F_m x - omega)
         + k_P (theta - theta_d) omega
    """
    E_k = energy(x, p)
    f_m = rotational_row(model)
    xv = x.as_array()
    return (k_E_used * E_k * energy_rate(x, u, model.h, p)
            + gains.k_D / model.h * (x.omega - d.omega_d) * (float(f_m @ xv) - x.omega)
            + gains.k_P * (x.theta - d.theta_d) * x.omega)


def v1_margin(x: PlantState, d: DesiredState, model: DiscreteModel, gains: GainSet) -> float:
    """Left-hand side of V1 (<= 0 required):
    k_P (theta - theta_d) omega - (k_D/h)(omega - omega_d)(F*_m x - omega).
    """
    f_m_star = -rotational_row(model)
    xv = x.as_array()
    return (gains.k_P * (x.theta - d.theta_d) * x.omega
            - gains.k_D / model.h * (x.omega - d.omega_d) * (float(f_m_star @ xv) - x.omega))


def check_conditions(x: PlantState, d: DesiredState, u: float, model: DiscreteModel,
                     gains: GainSet, k_E_used: float, p: MotorParams) -> LyapunovSample:
    """Evaluate every stability diagnostic at one sample."""
    E_k = energy(x, p)
    V = lyapunov(x, d, E_k, gains, k_E_used)
    Vp = v_prime(x, d, u, model, gains, k_E_used, p)

    v1 = v1_margin(x, d, model, gains)

    A, B = continuous_matrices(p)
    xv = x.as_array()
    closed = A @ xv + B * u           # B u + A x
    v2 = float(np.max(closed))

    f_m = rotational_row(model)
    low = gains.k_D * (x.omega - d.omega_d) * (float(f_m @ xv) - x.omega)

    return LyapunovSample(
        V=V,
        V_prime=Vp,
        condition_main=Vp <= 0.0,
        V1_ok=v1 <= 0.0,
        V2_ok=bool(np.all(closed <= 0.0)),
        boundary_low_ok=low <= 0.0,
        boundary_high_ok=bool(np.all(-closed <= 0.0)),  # -A x <= B u
        v1_margin=v1,
        v2_margin=v2,
    )


def stability_map(p: MotorParams, gains: GainSet, h_values, omega_values,
                  current_I: float = 0.4, theta: float = 0.1,
                  desired: DesiredState | None = None) -> StabilityGrid:
    """V1 margin over an (h, |omega|) grid at constant current and angle.

    Cells are independent; one discretization is shared per h row.
    """
    h_values = np.asarray(h_values, dtype=float)
    omega_values = np.asarray(omega_values, dtype=float)
    if h_values.size == 0 or omega_values.size == 0:
        raise ValueError("grid axes must be non-empty")
    d = desired if desired is not None else DesiredState()

    margins = np.empty((h_values.size, omega_values.size))
    for i, h in enumerate(h_values):
        model = discretize(p, float(h))
        for j, omega in enumerate(omega_values):
            state = PlantState(current_I=current_I, omega=float(omega), theta=theta)
            margins[i, j] = v1_margin(state, d, model, gains)
    return StabilityGrid(
        axis1_name="h",
        axis1_values=h_values,
        axis2_name="abs_omega",
        axis2_values=omega_values,
        margins=margins,
    )
