"""Closed-loop simulation: per-step rediscretization, gain retune, control,
exact ZOH state update, and full diagnostic logging.

The discrete update x[k+1] = F x[k] + G u[k] is the exact zero-order-hold
solution, so no ODE solver is involved in a run. ``rk4_crosscheck`` is a
validation-only path that re-integrates the continuous model with a fine
fixed-step RK4 under the same piecewise-constant input and reports the
worst relative deviation at the sample instants.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .controller import GainSet, GuardSet, control_input
from .discretizer import discretize
from .plant import DesiredState, MotorParams, PlantState, continuous_matrices, energy
from .scheduler import Scheduler, ScheduleSpec
from .stability import check_conditions

# any state component beyond this magnitude aborts the run
DIVERGENCE_LIMIT = 1e9

TRACE_COLUMNS = ("k", "t", "h_k", "I", "omega", "theta", "u", "E", "k_E",
                 "V", "V_prime", "saturated", "guard_event", "V1_ok", "V2_ok", "cond_main")


class DivergenceError(RuntimeError):
    """State magnitude exceeded DIVERGENCE_LIMIT; carries the partial trace."""

    def __init__(self, message: str, trace: list["TraceRecord"]):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SimConfig:
    params: MotorParams = MotorParams()
    gains: GainSet = GainSet()
    guards: GuardSet = GuardSet()
    desired: DesiredState = DesiredState()
    initial: PlantState = PlantState(current_I=0.4, omega=5.0, theta=0.1)
    schedule: ScheduleSpec = ScheduleSpec()
    duration: float = 10.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")


@dataclass(frozen=True)
class TraceRecord:
    """One simulation step; field order matches the trace CSV columns."""

    k: int
    t: float
    h_k: float
    I: float
    omega: float
    theta: float
    u: float
    E: float
    k_E: float
    V: float
    V_prime: float
    saturated: bool
    guard_event: str
    V1_ok: bool
    V2_ok: bool
    cond_main: bool


def run(cfg: SimConfig) -> list[TraceRecord]:
    """Simulate until the clock reaches cfg.duration; returns the full trace.

    Input threading is strictly sequential: u_prev feeds the gain retune of
    the next step and starts at 0 V.
    """
    sched = Scheduler(cfg.schedule)
    state = cfg.initial
    u_prev = 0.0
    t = 0.0
    k = 0
    records: list[TraceRecord] = []
    while t < cfg.duration:
        h = sched.next_period()
        model = discretize(cfg.params, h, eps_h=cfg.guards.eps_h)
        out = control_input(state, cfg.desired, model, cfg.gains, cfg.guards, cfg.params, u_prev)
        sample = check_conditions(state, cfg.desired, out.u, model, cfg.gains, out.k_E_used, cfg.params)
        records.append(TraceRecord(
            k=k, t=t, h_k=h,
            I=state.current_I, omega=state.omega, theta=state.theta,
            u=out.u, E=energy(state, cfg.params), k_E=out.k_E_used,
            V=sample.V, V_prime=sample.V_prime,
            saturated=out.saturated, guard_event=out.guard_event,
            V1_ok=sample.V1_ok, V2_ok=sample.V2_ok, cond_main=sample.condition_main,
        ))
        xv = model.F @ state.as_array() + model.G * out.u
        if not np.all(np.isfinite(xv)) or np.max(np.abs(xv)) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"state magnitude exceeded {DIVERGENCE_LIMIT:.0e} at t = {t + h:.6f} s", records)
        state = PlantState.from_array(xv)
        u_prev = out.u
        t += h
        k += 1
    return records


def schedule_hash(trace: list[TraceRecord]) -> str:
    """SHA-256 of the period sequence, for pairing runs on a shared schedule."""
    return hashlib.sha256(np.array([r.h_k for r in trace]).tobytes()).hexdigest()


@dataclass(frozen=True)
class ComparisonSummary:
    final_theta_err_dynamic: float
    final_omega_err_dynamic: float
    final_theta_err_constant: float
    final_omega_err_constant: float
    schedule_hash: str


@dataclass(frozen=True)
class ComparisonResult:
    dynamic: list[TraceRecord]
    constant: list[TraceRecord]
    summary: ComparisonSummary


def compare_gain_modes(cfg: SimConfig) -> ComparisonResult:
    """Run dynamic and constant gain modes on the identical period sequence."""
    cfg_dyn = replace(cfg, gains=replace(cfg.gains, gain_mode="dynamic"))
    cfg_con = replace(cfg, gains=replace(cfg.gains, gain_mode="constant"))
    trace_dyn = run(cfg_dyn)
    trace_con = run(cfg_con)
    d = cfg.desired
    summary = ComparisonSummary(
        final_theta_err_dynamic=abs(trace_dyn[-1].theta - d.theta_d),
        final_omega_err_dynamic=abs(trace_dyn[-1].omega - d.omega_d),
        final_theta_err_constant=abs(trace_con[-1].theta - d.theta_d),
        final_omega_err_constant=abs(trace_con[-1].omega - d.omega_d),
        schedule_hash=schedule_hash(trace_dyn),
    )
    return ComparisonResult(dynamic=trace_dyn, constant=trace_con, summary=summary)


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(trace: list[TraceRecord], path) -> None:
    """Write a trace with the exact column contract in TRACE_COLUMNS.

    Floats use round-trip decimal precision, booleans are 1/0, and
    guard_event is the event name, so identical traces produce identical
    bytes.
    """
    with Path(path).open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace:
            w.writerow([_format_cell(getattr(r, name)) for name in TRACE_COLUMNS])


def read_trace_csv(path) -> list[TraceRecord]:
    """Inverse of write_trace_csv."""
    converters = {f.name: f.type for f in fields(TraceRecord)}
    records = []
    with Path(path).open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(TRACE_COLUMNS):
            raise ValueError(f"unexpected trace header: {reader.fieldnames}")
        for row in reader:
            kwargs = {}
            for name, kind in converters.items():
                raw = row[name]
                if kind in ("bool", bool):
                    kwargs[name] = raw == "1"
                elif kind in ("int", int):
                    kwargs[name] = int(raw)
                elif kind in ("float", float):
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            records.append(TraceRecord(**kwargs))
    return records


def rk4_crosscheck(cfg: SimConfig, trace: list[TraceRecord], t_end: float | None = None,
                   dt: float = 1e-5) -> float:
    """Max relative deviation between the ZOH trace and a fine RK4 re-integration.

    The continuous model is integrated with fixed-step RK4 (step <= dt,
    chosen to divide each period exactly) under the trace's logged
    piecewise-constant input, and compared against the logged state at every
    sample instant up to t_end.
    """
    A, B = continuous_matrices(cfg.params)
    x = cfg.initial.as_array()
    worst = 0.0
    for rec, nxt in zip(trace[:-1], trace[1:]):
        if t_end is not None and nxt.t > t_end:
            break
        n = int(np.ceil(rec.h_k / dt))
        step = rec.h_k / n
        force = B * rec.u
        for _ in range(n):
            k1 = A @ x + force
            k2 = A @ (x + 0.5 * step * k1) + force
            k3 = A @ (x + 0.5 * step * k2) + force
            k4 = A @ (x + step * k3) + force
            x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        logged = np.array([nxt.I, nxt.omega, nxt.theta])
        err = np.max(np.abs(logged - x)) / max(np.max(np.abs(x)), 1e-12)
        worst = max(worst, float(err))
    return worst
