"""Acceptance gate: the quantitative claims this package stands behind.

Each numbered test checks one claim at its stated tolerance and prints a
single summary line with the measured quantities.  The bundled scenarios
are simulated once and shared across the tests.
"""
from __future__ import annotations

import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from circform import sim
from circform.graphs import (
    complete_graph,
    from_circulant_row,
    laplacian_eigenvalues,
)
from circform.potentials import grad_w_m, w_m
from circform.scenario import bundled_scenario_names, load_bundled

RING6 = from_circulant_row([2, -1, 0, 0, 0, -1])
FULL6 = complete_graph(6)
TWO_TRIANGLES = from_circulant_row([2, 0, -1, 0, -1, 0])


@pytest.fixture(scope="module")
def runs():
    out = {}
    for name in bundled_scenario_names():
        scenario = load_bundled(name)
        t0 = time.perf_counter()
        traj, report = sim.run(scenario)
        out[name] = SimpleNamespace(
            scenario=scenario, traj=traj, report=report,
            wall=time.perf_counter() - t0)
    return out


def final_window(traj):
    return max(1, math.ceil(0.1 * traj.n_samples))


def test_01_ring_balancing_converges_quickly(runs):
    r = runs["example1_balance"]
    config = r.scenario.build_controller()
    assert config.law == "individual_balance"
    assert config.K == 1.0 and config.omega_d == 0.2
    assert r.scenario.integration.t_end == 200.0

    p_theta = r.report.final["p_theta_abs"]
    omega_err = r.report.final["omega_err_max"]
    assert r.report.converged
    assert p_theta < 1e-2
    assert omega_err < 1e-3
    assert r.wall < 2.0
    print(f"PASS 1 example1_balance: |p_theta|={p_theta:.2e} "
          f"omega_err={omega_err:.2e} wall={r.wall:.2f}s")


def test_02_ring_synchronization_with_monotone_headings(runs):
    r = runs["example1_sync"]
    config = r.scenario.build_controller()
    assert config.law == "individual_sync" and config.K == -1.0
    assert r.scenario.integration.t_end == 200.0

    p_theta = r.report.final["p_theta_abs"]
    omega_err = r.report.final["omega_err_max"]
    assert r.report.converged
    assert p_theta > 0.99
    assert omega_err < 1e-3

    w = final_window(r.traj)
    deltas = np.diff(r.traj.headings[-w:], axis=0)
    assert np.all(deltas > 0.0)
    print(f"PASS 2 example1_sync: |p_theta|={p_theta:.6f} "
          f"omega_err={omega_err:.2e} min_heading_step={deltas.min():.3g}")


def test_03_common_circle_for_both_gain_signs(runs):
    measured = []
    for name, K in (("example2_balance", 0.5), ("example2_sync", -1.0)):
        r = runs[name]
        config = r.scenario.build_controller()
        assert config.law == "common_circle"
        assert config.K == K and config.kappa == 0.1
        assert config.center == 20.0 + 5.0j and config.omega_d == 0.2

        assert r.report.converged
        radius_err = np.max(np.abs(r.traj.radius_err[-1]))
        assert radius_err < 0.05
        measured.append(f"{name} radius_err={radius_err:.2e}")

    centroid = runs["example2_balance"].traj.centroid[-1]
    centroid_err = abs(centroid - (20.0 + 5.0j))
    assert centroid_err < 0.05
    measured.append(f"centroid_err={centroid_err:.2e}")
    print("PASS 3 " + "; ".join(measured))


def test_04_patterns_at_published_gains_with_splay_gaps(runs):
    cases = {
        "example3_pattern_2_6": (0.1, -0.5),
        "example3_pattern_3_6": (0.1, 0.1, -0.5),
        "example3_splay": (0.1, 0.1, 0.1, 0.1, 0.1, -0.5),
    }
    measured = []
    for name, gains in cases.items():
        r = runs[name]
        config = r.scenario.build_controller()
        assert config.law == "pattern"
        assert config.K == 1.0 and config.kappa == 0.1
        assert config.harmonic_gains == gains

        assert r.report.converged
        residuals = sim.pattern_residuals(r.traj.headings[-1], len(gains))
        assert np.max(residuals) < 1e-2
        measured.append(f"{name} max_residual={np.max(residuals):.1e}")

    final = np.sort(np.mod(runs["example3_splay"].traj.headings[-1],
                           2.0 * np.pi))
    gaps = np.rad2deg(np.diff(np.concatenate([final,
                                              [final[0] + 2.0 * np.pi]])))
    assert gaps.shape == (6,)
    assert np.all(np.abs(gaps - 60.0) < 1.0)
    measured.append(f"splay_gap_spread={np.max(np.abs(gaps - 60.0)):.3f}deg")
    print("PASS 4 " + "; ".join(measured))


def test_05_subgroup_circles_and_multilevel_consensus(runs):
    measured = []
    for name in ("example5_subgroups", "example5_multilevel"):
        r = runs[name]
        config = r.scenario.build_controller()
        assert config.K == -1.0 and config.kappa == 0.5
        assert r.report.converged
        assert r.report.blocks is not None and len(r.report.blocks) == 3
        for b, block in enumerate(r.report.blocks):
            assert block["p_theta_abs"] > 0.99
            assert block["omega_err_max"] < 1e-3
            assert block["radius_err_max"] < 0.05
        worst_p = min(b["p_theta_abs"] for b in r.report.blocks)
        measured.append(f"{name} worst_block_|p|={worst_p:.6f}")

    r = runs["example5_multilevel"]
    assert r.scenario.build_controller().intra_graph is not None
    collective = abs(np.mean(np.exp(1j * r.traj.headings[-1])))
    assert r.traj.headings.shape[1] == 12
    assert collective > 0.99
    measured.append(f"collective_|p|={collective:.6f}")
    print("PASS 5 " + "; ".join(measured))


def test_06_composite_potential_never_increases(runs):
    counts = {name: r.report.lyapunov_violations for name, r in runs.items()}
    assert len(counts) == 9
    assert all(v == 0 for v in counts.values()), counts
    print(f"PASS 6 zero violations across {len(counts)} scenarios "
          f"(tolerance 1e-7*(1+|value|) per step)")


def test_07_coupling_terms_match_finite_differences():
    h = 1e-6
    worst = 0.0
    rng = np.random.default_rng(20260821)
    for graph in (RING6, FULL6, TWO_TRIANGLES):
        for _ in range(100):
            thetas = rng.uniform(-np.pi, np.pi, 6)
            for m in range(1, 7):
                grad = m * grad_w_m(thetas, graph, m)
                fd = np.empty(6)
                for k in range(6):
                    e_k = np.zeros(6)
                    e_k[k] = h
                    fd[k] = (w_m(thetas + e_k, graph, m)
                             - w_m(thetas - e_k, graph, m)) / (2.0 * h)
                rel = (np.max(np.abs(grad - fd))
                       / max(1.0, np.max(np.abs(fd))))
                worst = max(worst, rel)
    assert worst <= 1e-6
    print(f"PASS 7 gradient vs central differences: worst rel err "
          f"{worst:.2e} over 100 states x m=1..6 x 3 graphs")


def test_08_spectra_eigenpairs_and_order_parameter_identity(runs):
    # Closed-form circulant spectra against the dense solver, for every
    # graph shipped in a bundled scenario (block components included).
    rows = ([2, -1, 0, 0, 0, -1], [2, -1, 0, -1], [3, -1, -1, -1])
    worst_eig = 0.0
    worst_res = 0.0
    for row in rows:
        g = from_circulant_row(row)
        n = g.n
        closed = np.sort(g.eigenvalues)
        dense = np.linalg.eigvalsh(g.laplacian)
        worst_eig = max(worst_eig, np.max(np.abs(closed - dense)))
        for l in range(n):
            f = np.exp(2j * np.pi * l * np.arange(n) / n)
            lam = 2.0 * sum(-row[j] * (1.0 - math.cos(2.0 * math.pi * l * j / n))
                            for j in range(1, n)) / 2.0
            residual = np.max(np.abs(g.laplacian @ f - lam * f))
            worst_res = max(worst_res, residual)
    assert worst_eig <= 1e-9
    assert worst_res <= 1e-10

    for name, r in runs.items():
        g = r.scenario.build_graph()
        dense = np.linalg.eigvalsh(g.laplacian)
        assert np.max(np.abs(np.sort(laplacian_eigenvalues(g)) - dense)) <= 1e-9

    # <z, Pz> with the centering projector equals N * (1 - |p_theta|^2).
    rng = np.random.default_rng(7)
    worst_id = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        thetas = rng.uniform(-np.pi, np.pi, n)
        z = np.exp(1j * thetas)
        p = np.mean(z)
        quad = np.real(np.conj(z) @ (z - np.mean(z)))
        worst_id = max(worst_id, abs(quad - n * (1.0 - abs(p) ** 2)))
    assert worst_id <= 1e-10
    print(f"PASS 8 spectra: eig err {worst_eig:.1e}, eigenpair residual "
          f"{worst_res:.1e}, projector identity err {worst_id:.1e}")


def test_09_integrator_order_and_period_return():
    from circform.controllers import ControllerConfig
    from circform.model import SwarmState
    from circform.sim import IntegrationSettings, simulate

    open_loop = ControllerConfig(law="individual_sync", K=0.0, omega_d=0.0)
    graph = from_circulant_row([2, -1, -1])
    state0 = SwarmState(
        positions=np.array([0.0 + 0.0j, 2.0 - 1.0j, -1.0 + 3.0j]),
        headings=np.array([0.3, 2.0, -1.2]),
        omegas=np.full(3, 0.5),
    )

    def error(dt, t_end=10.0):
        settings = IntegrationSettings(dt=dt, t_end=t_end,
                                       record_every=10**9)
        traj, _ = simulate(state0, open_loop, graph, settings,
                           validate=False)
        w = state0.omegas
        z0 = np.exp(1j * state0.headings)
        exact = state0.positions + (
            np.exp(1j * (state0.headings + w * t_end)) - z0) / (1j * w)
        return np.max(np.abs(traj.positions[-1] - exact))

    order = np.log2(error(0.1) / error(0.05))
    assert order >= 3.8

    period = 4.0 * np.pi
    settings = IntegrationSettings(dt=0.01, t_end=period, record_every=10**9)
    traj, _ = simulate(state0, open_loop, graph, settings, validate=False)
    return_err = np.max(np.abs(traj.positions[-1] - state0.positions))
    assert return_err < 1e-5
    print(f"PASS 9 integrator: empirical order {order:.2f}, period return "
          f"{return_err:.1e} m at dt=0.01")
