"""Self-contained numerical property suites behind ``circform verify``.

Each suite runs a batch of independent checks and reports one row per
check.  These are smoke-level reassurances runnable in the field without
a test harness; the full evidence lives in the package's test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import controllers, potentials
from .graphs import (circulant_spectrum, complete_graph, from_circulant_row,
                     laplacian_eigenvalues)
from .model import SwarmState
from .sim import IntegrationSettings, simulate

SUITES = ("graphs", "potentials", "lyapunov")


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str


def _test_graphs() -> list:
    out = []
    ring6 = from_circulant_row([2, -1, 0, 0, 0, -1])

    spec = np.sort(laplacian_eigenvalues(ring6))
    expected = np.array([0.0, 1.0, 1.0, 3.0, 3.0, 4.0])
    err = float(np.abs(spec - expected).max())
    out.append(CheckResult(
        "graphs", "six-cycle spectrum {0,1,1,3,3,4}", err < 1e-9,
        f"max deviation {err:.2e}"))

    worst = 0.0
    for row in ([2, -1, 0, -1], [3, -1, -1, -1], [2, -1, 0, 0, 0, -1],
                [4, -1, -1, 0, -1, -1]):
        g = from_circulant_row(row)
        closed = np.sort(circulant_spectrum(g).eigenvalues)
        dense = np.sort(laplacian_eigenvalues(g))
        worst = max(worst, float(np.abs(closed - dense).max()))
    out.append(CheckResult(
        "graphs", "closed-form eigenvalues match dense solver", worst < 1e-9,
        f"worst case {worst:.2e}"))

    worst = 0.0
    for row in ([2, -1, 0, -1], [2, -1, 0, 0, 0, -1], [3, -1, -1, -1]):
        g = from_circulant_row(row)
        s = circulant_spectrum(g)
        for lam, vec in zip(s.eigenvalues, s.vectors.T):
            worst = max(worst, float(
                np.abs(g.laplacian @ vec - lam * vec).max()))
    out.append(CheckResult(
        "graphs", "eigenpair residuals L f = lambda f", worst < 1e-10,
        f"worst residual {worst:.2e}"))

    flags = (ring6.is_connected, ring6.is_circulant,
             complete_graph(5).is_connected)
    out.append(CheckResult(
        "graphs", "connectivity and circulant detection", all(flags),
        f"flags {flags}"))
    return out


def _test_potentials() -> list:
    out = []
    rng = np.random.default_rng(11)
    graphs = (from_circulant_row([2, -1, 0, 0, 0, -1]),
              complete_graph(6), from_circulant_row([2, -1, -1]))

    # Coupling term versus central differences of w_m: the analytic
    # derivative of w_m is m times the coupling term.
    worst = 0.0
    h = 1e-6
    for g in graphs:
        for _ in range(20):
            th = rng.uniform(0.0, 2.0 * np.pi, g.n)
            for m in (1, 2, 3, 6):
                grad = m * potentials.grad_w_m(th, g, m)
                for k in range(g.n):
                    e = np.zeros(g.n)
                    e[k] = h
                    fd = (potentials.w_m(th + e, g, m)
                          - potentials.w_m(th - e, g, m)) / (2.0 * h)
                    denom = max(1.0, abs(fd))
                    worst = max(worst, abs(grad[k] - fd) / denom)
    out.append(CheckResult(
        "potentials", "coupling term matches finite differences",
        worst <= 1e-6, f"worst rel error {worst:.2e}"))

    worst = 0.0
    for n in range(2, 9):
        proj = np.eye(n) - np.full((n, n), 1.0 / n)
        for _ in range(40):
            th = rng.uniform(0.0, 2.0 * np.pi, n)
            z = np.exp(1j * th)
            lhs = n * (1.0 - abs(np.mean(z)) ** 2)
            rhs = float(np.real(np.conj(z) @ (proj @ z)))
            worst = max(worst, abs(lhs - rhs))
    out.append(CheckResult(
        "potentials", "projector identity N(1-|p|^2) = <z, Pz>",
        worst < 1e-10, f"worst deviation {worst:.2e}"))

    worst_low, worst_high, worst_sum = 0.0, 0.0, 0.0
    for g in graphs:
        bound = 0.5 * g.n * g.lambda_max
        for _ in range(50):
            th = rng.uniform(0.0, 2.0 * np.pi, g.n)
            for m in (1, 2, 3):
                w = potentials.w_m(th, g, m)
                worst_low = min(worst_low, w)
                worst_high = max(worst_high, w - bound)
                worst_sum = max(worst_sum, abs(
                    potentials.grad_w_m(th, g, m).sum()))
    out.append(CheckResult(
        "potentials", "0 <= W_m <= (N/2) lambda_max",
        worst_low >= -1e-12 and worst_high <= 1e-9,
        f"below {worst_low:.2e}, above {worst_high:.2e}"))
    out.append(CheckResult(
        "potentials", "coupling components sum to zero", worst_sum < 1e-12,
        f"worst sum {worst_sum:.2e}"))
    return out


def _descent_run(config, graph, state) -> tuple:
    settings = IntegrationSettings(dt=0.01, t_end=30.0, record_every=10)
    traj, report = simulate(state, config, graph, settings)
    drop = float(traj.lyapunov[0] - traj.lyapunov[-1])
    return report.lyapunov_violations, drop


def _test_lyapunov() -> list:
    out = []
    rng = np.random.default_rng(3)
    g = from_circulant_row([2, -1, 0, 0, 0, -1])
    state = SwarmState(
        positions=rng.uniform(-6, 6, 6) + 1j * rng.uniform(-6, 6, 6),
        headings=rng.uniform(0.0, 2.0 * np.pi, 6),
        omegas=rng.uniform(-0.8, 0.8, 6))

    cases = (
        ("individual balancing", controllers.ControllerConfig(
            law="individual_balance", K=1.0, omega_d=0.2)),
        ("individual synchronization", controllers.ControllerConfig(
            law="individual_sync", K=-1.0, omega_d=0.2)),
        ("common circle", controllers.ControllerConfig(
            law="common_circle", K=0.5, kappa=0.1, omega_d=0.2,
            center=20 + 5j)),
        ("pattern M=2", controllers.ControllerConfig(
            law="pattern", K=1.0, kappa=0.1, omega_d=0.2, center=20 + 5j,
            harmonic_gains=(0.1, -0.5))),
    )
    for label, config in cases:
        violations, drop = _descent_run(config, g, state.copy())
        out.append(CheckResult(
            "lyapunov", f"{label}: composite never increases",
            violations == 0 and drop > 0.0,
            f"{violations} violations, total drop {drop:.3g}"))
    return out


def run_suites(which: str = "all") -> list:
    """Run the named suite ('all' for every one); return CheckResults."""
    if which != "all" and which not in SUITES:
        raise ValueError(f"unknown suite {which!r}; "
                         f"expected all or one of {SUITES}")
    picks = SUITES if which == "all" else (which,)
    rows = []
    for name in picks:
        rows.extend({"graphs": _test_graphs,
                     "potentials": _test_potentials,
                     "lyapunov": _test_lyapunov}[name]())
    return rows


def format_table(rows) -> str:
    width = max(len(f"{r.suite}: {r.name}") for r in rows)
    lines = []
    for r in rows:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {f'{r.suite}: {r.name}':<{width}}  {r.detail}")
    n_fail = sum(not r.passed for r in rows)
    lines.append(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return "\n".join(lines)
