"""Built-in identity suite: verifies the series operator's algebraic
relations and the discretizer against independent oracles
(scipy's Pade/scaling-squaring exponential and composite Gauss-Legendre
quadrature). Used by the `validate` CLI command.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .discretizer import discretize
from .matseries import SeriesOptions, expm_via_phi, phi
from .plant import MotorParams, continuous_matrices


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _max_norm(M) -> float:
    return float(np.max(np.abs(M)))


def _rel_err(got, want) -> float:
    return _max_norm(got - want) / max(_max_norm(want), 1e-300)


def integral_oracle(M, h: float) -> np.ndarray:
    """Composite Gauss-Legendre evaluation of the ZOH integral of e^(M tau).

    Panel count scales with ||M h|| so the fast transient of a stiff M is
    resolved; 10 nodes per panel.
    """
    nodes, weights = np.polynomial.legendre.leggauss(10)
    panels = max(4, int(np.ceil(_max_norm(M) * h / 2.0)))
    edges = np.linspace(0.0, h, panels + 1)
    half = 0.5 * (h / panels)
    total = np.zeros_like(np.asarray(M, dtype=float))
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        for t, wgt in zip(nodes, weights):
            total += wgt * expm(M * (mid + half * t))
    return total * half


def _random_matrices(rng: np.random.Generator, trials: int) -> list[np.ndarray]:
    return [rng.uniform(-5.0, 5.0, size=(3, 3)) for _ in range(trials)]


def _reference_cases() -> list[np.ndarray]:
    A, _ = continuous_matrices(MotorParams())
    return [A * h for h in (0.05, 0.11, 0.2)]


def run_identity_checks(seed: int = 0, trials: int = 50,
                        options: SeriesOptions | None = None) -> list[CheckResult]:
    """Run the full identity suite; `options` lets a degraded series
    tolerance be injected to confirm the checks can actually fail."""
    rng = np.random.Generator(np.random.PCG64(seed))
    mats = _random_matrices(rng, trials) + _reference_cases()

    commut = 0.0
    expo = 0.0
    simil = 0.0
    for M in mats:
        ph = phi(M, options)
        commut = max(commut, _max_norm(M @ ph - ph @ M) / (1.0 + _max_norm(M) ** 2))
        expo = max(expo, _rel_err(expm_via_phi(M, options), expm(M)))
    for M in mats[: max(trials // 2, 1)]:
        T = _well_conditioned(rng)
        lhs = phi(np.linalg.solve(T, M @ T), options)
        rhs = np.linalg.solve(T, phi(M, options) @ T)
        simil = max(simil, _rel_err(lhs, rhs))

    integ = 0.0
    for M in mats[: max(trials // 2, 1)] + _reference_cases():
        h = float(rng.uniform(0.01, 0.5)) if _max_norm(M) <= 5.0 else 1.0
        Mh = M * h
        integ = max(integ, _max_norm(integral_oracle(M, h) - h * phi(Mh, options))
                    / max(_max_norm(h * phi(Mh, options)), 1e-300))

    disc = 0.0
    p = MotorParams()
    A, B = continuous_matrices(p)
    aug = np.zeros((4, 4))
    aug[:3, :3] = A
    aug[:3, 3] = B
    for h in np.linspace(0.01, 0.3, 50):
        m = discretize(p, float(h), options=options)
        big = expm(aug * h)
        disc = max(disc, _rel_err(m.F, big[:3, :3]), _rel_err(m.G, big[:3, 3]))

    return [
        CheckResult("commutation M*phi(M) = phi(M)*M", commut, 1e-10),
        CheckResult("exponential e^M = I + M*phi(M)", expo, 1e-8),
        CheckResult("integral of e^(M tau) = h*phi(M h)", integ, 1e-7),
        CheckResult("similarity phi(T^-1 M T) = T^-1 phi(M) T", simil, 1e-8),
        CheckResult("discretize matches augmented exponential", disc, 1e-8),
    ]


def _well_conditioned(rng: np.random.Generator) -> np.ndarray:
    while True:
        T = np.eye(3) + rng.uniform(-0.5, 0.5, size=(3, 3))
        if np.linalg.cond(T) < 100.0:
            return T
