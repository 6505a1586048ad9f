"""Deterministic fixed-step simulation of the closed-loop swarm.

The integrator is the classical fourth-order Runge-Kutta scheme on the
agent-major flat state (x, y, theta, omega per agent).  Controls are
re-evaluated at every RK stage, so the closed loop is integrated as one
autonomous system.  A final shortened step lands exactly on t_end when the
horizon is not a multiple of dt.

The law-matched composite potential is evaluated after every step; an
increase beyond 1e-7 * (1 + |previous value|) counts as a descent
violation.  Accepted runs of a correctly configured law report zero
violations.

Convergence is judged on the trailing 10% of recorded samples: the
law-appropriate thresholds (phase order magnitude, angular-velocity error,
radius error, pattern residuals) must hold on every sample in that window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import controllers
from .graphs import InteractionGraph
from .model import SwarmState, flatten, unflatten

if TYPE_CHECKING:
    from .scenario import Scenario

LYAPUNOV_TOL = 1e-7


class SimulationDiverged(RuntimeError):
    """The integrator produced a non-finite state."""


@dataclass(frozen=True)
class IntegrationSettings:
    """Fixed-step integration plan.

    ``record_every`` is the sampling stride in steps; the initial state and
    the final state are always recorded.
    """

    dt: float = 0.01
    t_end: float = 200.0
    record_every: int = 10

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not np.isfinite(self.t_end) or self.t_end < 0.0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.t_end != 0.0 and self.t_end < self.dt:
            raise ValueError(
                f"t_end must be 0 or at least one step ({self.dt}), "
                f"got {self.t_end}"
            )
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(
                f"record_every must be a positive integer, "
                f"got {self.record_every}"
            )


@dataclass(frozen=True)
class Thresholds:
    """Convergence thresholds; defaults match the acceptance criteria."""

    balance_p_theta: float = 1e-2
    sync_p_theta: float = 0.99
    omega_err: float = 1e-3
    radius_err: float = 0.05
    pattern_residual: float = 1e-2


@dataclass
class Trajectory:
    """Recorded samples of a run plus derived metric series.

    Array shapes: times (S,), per-agent arrays (S, N).  ``radius_err`` is
    the signed distance-to-circle error and is NaN for laws without a
    circle target.  ``order_magnitudes[:, j]`` is |p_m| for
    m = ``orders[j]``.
    """

    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    omegas: np.ndarray
    controls: np.ndarray
    orders: tuple
    order_magnitudes: np.ndarray
    omega_err: np.ndarray
    radius_err: np.ndarray
    centroid: np.ndarray
    lyapunov: np.ndarray

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or self.times.shape[0] < 1:
            raise ValueError("a trajectory needs at least one sample")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        s, n = self.positions.shape
        for name in ("headings", "omegas", "controls", "omega_err",
                     "radius_err"):
            if getattr(self, name).shape != (s, n):
                raise ValueError(f"{name} shape mismatch")

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    def swarm_at(self, i: int) -> SwarmState:
        return SwarmState(
            positions=self.positions[i].copy(),
            headings=self.headings[i].copy(),
            omegas=self.omegas[i].copy(),
            time=float(self.times[i]),
        )


@dataclass
class ConvergenceReport:
    """Outcome of the convergence evaluation for one run.

    ``final`` maps metric names to their last-sample values (None where a
    metric does not apply to the law).  ``blocks`` carries the per-block
    metrics for the block laws.  ``t_converged`` is the earliest sample
    time from which the criteria hold through the end of the run.
    """

    converged: bool
    t_converged: float | None
    final: dict
    lyapunov_violations: int
    blocks: tuple | None = None


def pattern_residuals(headings, pattern_order: int) -> np.ndarray:
    """Residuals of the (M, N) pattern for heading samples.

    For m < M the residual is |sum_k e^(i*m*theta_k)| / N, zero when the
    scaled phases are balanced; for m = M it is 1 - |sum_k e^(i*M*theta_k)| / N,
    zero when they are synchronized.  Accepts a single heading vector (N,)
    or a series (S, N); returns (M,) or (S, M).
    """
    if pattern_order < 1:
        raise ValueError(f"pattern order must be >= 1, got {pattern_order}")
    headings = np.asarray(headings, dtype=float)
    single = headings.ndim == 1
    if single:
        headings = headings[None, :]
    out = np.empty((headings.shape[0], pattern_order))
    for m in range(1, pattern_order + 1):
        mag = np.abs(np.mean(np.exp(1j * m * headings), axis=1))
        out[:, m - 1] = mag if m < pattern_order else 1.0 - mag
    return out[0] if single else out


def _rk4_span(y: np.ndarray, deriv, dt: float, buffers) -> None:
    """One in-place classical RK4 step on the flat state."""
    k1, k2, k3, k4, ytmp, acc = buffers
    deriv(y, k1)
    np.multiply(k1, 0.5 * dt, out=ytmp)
    ytmp += y
    deriv(ytmp, k2)
    np.multiply(k2, 0.5 * dt, out=ytmp)
    ytmp += y
    deriv(ytmp, k3)
    np.multiply(k3, dt, out=ytmp)
    ytmp += y
    deriv(ytmp, k4)
    np.add(k2, k3, out=acc)
    acc *= 2.0
    acc += k1
    acc += k4
    acc *= dt / 6.0
    y += acc


def _make_deriv(raw_u):
    def deriv(y_in: np.ndarray, out: np.ndarray) -> None:
        x = y_in[0::4]
        yv = y_in[1::4]
        th = y_in[2::4]
        om = y_in[3::4]
        c = np.cos(th)
        s = np.sin(th)
        out[0::4] = c
        out[1::4] = s
        out[2::4] = om
        out[3::4] = raw_u(x, yv, c, s, th, om)
    return deriv


def step(state: SwarmState, config: controllers.ControllerConfig,
         graph: InteractionGraph, dt: float) -> SwarmState:
    """One closed-loop RK4 step; controls re-evaluated at each stage."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    bound = controllers.make_controls(config, graph, validate=False)
    y = flatten(state)
    buffers = tuple(np.empty_like(y) for _ in range(6))
    _rk4_span(y, _make_deriv(bound.raw), dt, buffers)
    return unflatten(y, time=state.time + dt)


def _plan_steps(settings: IntegrationSettings):
    dt = settings.dt
    t_end = settings.t_end
    n_full = int(math.floor(t_end / dt + 1e-9))
    rem = t_end - n_full * dt
    if rem <= 1e-9 * max(1.0, abs(t_end)):
        rem = 0.0
    return n_full, rem


def simulate(state0: SwarmState, config: controllers.ControllerConfig,
             graph: InteractionGraph, settings: IntegrationSettings,
             thresholds: Thresholds = Thresholds(), orders=None,
             validate: bool = True):
    """Integrate the closed loop and evaluate convergence.

    Returns (Trajectory, ConvergenceReport).  ``orders`` selects which
    |p_m| series to record; by default 1..M for the pattern law and just
    m = 1 otherwise.  ``validate=False`` bypasses the law's gain checks
    (negative testing only).
    """
    if state0.n != graph.n:
        raise ValueError(f"state has {state0.n} agents, graph has {graph.n}")
    bound = controllers.make_controls(config, graph, validate=validate)
    lyap = controllers.make_lyapunov(config, graph, validate=False)
    if orders is None:
        orders = tuple(range(1, (config.pattern_order or 1) + 1))
    else:
        orders = tuple(int(m) for m in orders)

    n_full, rem = _plan_steps(settings)
    total_steps = n_full + (1 if rem else 0)
    stride = int(settings.record_every)
    sample_steps = sorted(set(range(0, total_steps + 1, stride)) | {total_steps})
    n_samples = len(sample_steps)
    n = state0.n

    times = np.empty(n_samples)
    positions = np.empty((n_samples, n), dtype=complex)
    headings = np.empty((n_samples, n))
    omegas = np.empty((n_samples, n))
    controls = np.empty((n_samples, n))
    lyap_samples = np.empty(n_samples)

    y = flatten(state0)
    buffers = tuple(np.empty_like(y) for _ in range(6))
    deriv = _make_deriv(bound.raw)
    x_v, yv_v, th_v, om_v = y[0::4], y[1::4], y[2::4], y[3::4]

    def record(slot: int, t: float, lyap_value: float) -> None:
        if not np.all(np.isfinite(y)):
            raise SimulationDiverged(
                f"non-finite state at t = {t:.6g}; reduce dt"
            )
        times[slot] = t
        positions[slot] = x_v + 1j * yv_v
        headings[slot] = th_v
        omegas[slot] = om_v
        c = np.cos(th_v)
        s = np.sin(th_v)
        controls[slot] = bound.raw(x_v, yv_v, c, s, th_v, om_v)
        lyap_samples[slot] = lyap_value

    lyap_prev = lyap.raw(x_v, yv_v, th_v, om_v)
    violations = 0
    next_sample = 0
    if sample_steps[next_sample] == 0:
        record(0, state0.time, lyap_prev)
        next_sample = 1

    t0 = state0.time
    # Overflow in a blowing-up state is reported through SimulationDiverged
    # by the finiteness checks, not as a numpy warning.
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(total_steps):
            h = settings.dt if i < n_full else rem
            _rk4_span(y, deriv, h, buffers)
            t = (t0 + (i + 1) * settings.dt if i < n_full
                 else t0 + settings.t_end)
            lyap_now = lyap.raw(x_v, yv_v, th_v, om_v)
            if not np.isfinite(lyap_now):
                raise SimulationDiverged(
                    f"non-finite state at t = {t:.6g}; reduce dt"
                )
            if lyap_now > lyap_prev + LYAPUNOV_TOL * (1.0 + abs(lyap_prev)):
                violations += 1
            lyap_prev = lyap_now
            if next_sample < n_samples and sample_steps[next_sample] == i + 1:
                record(next_sample, t, lyap_now)
                next_sample += 1

    traj = _assemble_trajectory(times, positions, headings, omegas, controls,
                                lyap_samples, orders, config, graph.n)
    report = evaluate_convergence(traj, config, thresholds,
                                  lyapunov_violations=violations)
    return traj, report


def _assemble_trajectory(times, positions, headings, omegas, controls,
                         lyap_samples, orders, config, n) -> Trajectory:
    rho_k, omd_k, center_k = controllers.per_agent_targets(config, n)
    order_mag = np.empty((times.shape[0], len(orders)))
    for j, m in enumerate(orders):
        order_mag[:, j] = np.abs(
            np.mean(np.exp(1j * m * headings), axis=1)) / m
    omega_err = np.abs(omegas - omd_k[None, :])
    if rho_k is None:
        radius_err = np.full_like(omega_err, np.nan)
    else:
        radius_err = np.abs(positions - center_k[None, :]) - rho_k[None, :]
    return Trajectory(
        times=times,
        positions=positions,
        headings=headings,
        omegas=omegas,
        controls=controls,
        orders=orders,
        order_magnitudes=order_mag,
        omega_err=omega_err,
        radius_err=radius_err,
        centroid=positions.mean(axis=1),
        lyapunov=lyap_samples,
    )


def _block_metric_series(traj: Trajectory, config) -> list:
    """Per-block series dicts: p_theta magnitude, omega and radius error."""
    out = []
    for block in config.blocks:
        idx = list(block)
        p = np.abs(np.mean(np.exp(1j * traj.headings[:, idx]), axis=1))
        out.append({
            "p_theta_abs": p,
            "omega_err_max": traj.omega_err[:, idx].max(axis=1),
            "radius_err_max": np.abs(traj.radius_err[:, idx]).max(axis=1),
        })
    return out


def _ok_series(traj: Trajectory, config, thresholds: Thresholds):
    """Boolean per-sample criteria array plus per-block arrays."""
    law = config.law
    p1 = np.abs(np.mean(np.exp(1j * traj.headings), axis=1))
    omega_ok = traj.omega_err.max(axis=1) < thresholds.omega_err
    block_oks = None

    if law == "individual_balance":
        ok = (p1 < thresholds.balance_p_theta) & omega_ok
    elif law == "individual_sync":
        ok = (p1 > thresholds.sync_p_theta) & omega_ok
    elif law == "common_circle":
        radius_ok = (np.abs(traj.radius_err).max(axis=1)
                     < thresholds.radius_err)
        if config.K > 0:
            centroid_ok = (np.abs(traj.centroid - config.center)
                           < thresholds.radius_err)
            ok = ((p1 < thresholds.balance_p_theta) & omega_ok
                  & radius_ok & centroid_ok)
        else:
            ok = (p1 > thresholds.sync_p_theta) & omega_ok & radius_ok
    elif law == "pattern":
        radius_ok = (np.abs(traj.radius_err).max(axis=1)
                     < thresholds.radius_err)
        residuals = pattern_residuals(traj.headings, config.pattern_order)
        ok = (residuals < thresholds.pattern_residual).all(axis=1)
        ok &= omega_ok & radius_ok
        if config.pattern_order > 1:
            ok &= np.abs(traj.centroid - config.center) < thresholds.radius_err
    else:
        series = _block_metric_series(traj, config)
        block_oks = []
        for s in series:
            if config.K > 0:
                p_ok = s["p_theta_abs"] < thresholds.balance_p_theta
            else:
                p_ok = s["p_theta_abs"] > thresholds.sync_p_theta
            block_oks.append(
                p_ok
                & (s["omega_err_max"] < thresholds.omega_err)
                & (s["radius_err_max"] < thresholds.radius_err))
        if law == "multilevel":
            # The cross-block layer acts on the collective phase order.
            collective = (p1 > thresholds.sync_p_theta if config.K < 0
                          else p1 < thresholds.balance_p_theta)
            radius_ok = (np.abs(traj.radius_err).max(axis=1)
                         < thresholds.radius_err)
            ok = collective & omega_ok & radius_ok
        else:
            ok = np.logical_and.reduce(block_oks)
    return ok, block_oks


def evaluate_convergence(traj: Trajectory, config, thresholds: Thresholds,
                         lyapunov_violations: int = 0) -> ConvergenceReport:
    """Judge a trajectory against the law-appropriate thresholds.

    The run converged when every sample in the trailing 10% window meets
    the criteria; ``t_converged`` is the start of the trailing all-ok
    suffix.
    """
    ok, _ = _ok_series(traj, config, thresholds)
    s = traj.n_samples
    window = max(1, math.ceil(0.1 * s))
    converged = bool(ok[-window:].all())
    t_converged = None
    if converged:
        suffix_start = s - 1
        while suffix_start > 0 and ok[suffix_start - 1]:
            suffix_start -= 1
        t_converged = float(traj.times[suffix_start])

    p1 = float(np.abs(np.mean(np.exp(1j * traj.headings[-1]))))
    final = {
        "p_theta_abs": p1,
        "omega_err_max": float(traj.omega_err[-1].max()),
        "radius_err_max": None,
        "centroid_distance": None,
        "pattern_residuals": None,
    }
    if not np.isnan(traj.radius_err[-1]).any():
        final["radius_err_max"] = float(np.abs(traj.radius_err[-1]).max())
    if config.law in ("common_circle", "pattern"):
        final["centroid_distance"] = float(
            np.abs(traj.centroid[-1] - config.center))
    if config.law == "pattern":
        final["pattern_residuals"] = [
            float(r) for r in
            pattern_residuals(traj.headings[-1], config.pattern_order)
        ]

    blocks = None
    if config.law in ("subgroup", "multilevel"):
        series = _block_metric_series(traj, config)
        blocks = tuple(
            {
                "p_theta_abs": float(s_["p_theta_abs"][-1]),
                "omega_err_max": float(s_["omega_err_max"][-1]),
                "radius_err_max": float(s_["radius_err_max"][-1]),
            }
            for s_ in series
        )

    return ConvergenceReport(
        converged=converged,
        t_converged=t_converged,
        final=final,
        lyapunov_violations=lyapunov_violations,
        blocks=blocks,
    )


def lyapunov_series(traj: Trajectory, config, graph: InteractionGraph):
    """Composite potential at each sample plus the violation count.

    Violations here are judged sample-to-sample; the per-step count from
    :func:`simulate` is the stricter certificate.
    """
    lyap = controllers.make_lyapunov(config, graph, validate=False)
    values = np.array([
        lyap.raw(traj.positions[i].real, traj.positions[i].imag,
                 traj.headings[i], traj.omegas[i])
        for i in range(traj.n_samples)
    ])
    prev = values[:-1]
    violations = int(np.count_nonzero(
        values[1:] > prev + LYAPUNOV_TOL * (1.0 + np.abs(prev))))
    return values, violations


def run(scenario: "Scenario", seed=None):
    """Materialize a scenario and simulate it.

    Returns (Trajectory, ConvergenceReport).  ``seed`` overrides the
    scenario's own seed for randomized initial conditions.
    """
    graph = scenario.build_graph()
    config = scenario.build_controller(graph)
    state0 = scenario.build_initial_state(seed=seed)
    return simulate(state0, config, graph, scenario.integration,
                    thresholds=scenario.thresholds, orders=scenario.orders)
