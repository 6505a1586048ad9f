"""Feedback-law evaluation: equilibria, symmetries, gates, and wrappers."""
from __future__ import annotations

import warnings

import numpy as np
import pytest

from circform.controllers import (
    ControllerConfig,
    composite_kind_for,
    control_vector,
    make_controls,
    per_agent_targets,
    u_common_circle,
    u_individual,
    u_multilevel,
    u_pattern,
    u_subgroup,
    validate_config,
)
from circform.graphs import (
    block_diagonal,
    complete_graph,
    from_circulant_row,
    from_edges,
)
from circform.model import SwarmState

RING6 = from_circulant_row([2, -1, 0, 0, 0, -1])
RING4 = from_circulant_row([2, -1, 0, -1])
FULL3 = complete_graph(3)
PATH3 = from_edges(3, [(1, 2), (2, 3)])

SPLAY6 = np.arange(6) * np.pi / 3.0
ALT6 = np.array([0.0, np.pi] * 3)


def circle_positions(thetas, radius, center):
    return center - 1j * radius * np.exp(1j * thetas)


def state_on_circle(thetas, omega_d, center):
    thetas = np.asarray(thetas, dtype=float)
    return SwarmState(
        positions=circle_positions(thetas, 1.0 / omega_d, center),
        headings=thetas,
        omegas=np.full(thetas.shape[0], omega_d),
    )


def test_individual_balance_zero_at_balanced_rest():
    for thetas in (SPLAY6, ALT6):
        state = SwarmState(np.zeros(6, dtype=complex), thetas, np.full(6, 0.2))
        u = u_individual(state, RING6, K=1.0, omega_d=0.2, mode="balance")
        assert np.max(np.abs(u)) < 1e-10


def test_individual_sync_zero_at_synchronized_rest():
    state = SwarmState(np.zeros(6, dtype=complex), np.full(6, 0.9),
                       np.full(6, 0.2))
    u = u_individual(state, RING6, K=-1.0, omega_d=0.2, mode="sync")
    assert np.max(np.abs(u)) < 1e-10


def test_common_circle_zero_on_target_circle():
    center = 20.0 + 5.0j
    state = state_on_circle(np.full(6, 0.4), 0.2, center)
    u = u_common_circle(state, RING6, K=-1.0, kappa=0.1, omega_d=0.2,
                        center=center)
    assert np.max(np.abs(u)) < 1e-10


def test_common_circle_balance_zero_at_balanced_circle():
    center = 0.0j
    state = state_on_circle(ALT6, 0.2, center)
    u = u_common_circle(state, RING6, K=0.5, kappa=0.1, omega_d=0.2,
                        center=center)
    assert np.max(np.abs(u)) < 1e-10


def test_pattern_zero_at_two_cluster_arrangement():
    center = 20.0 + 5.0j
    state = state_on_circle(ALT6, 0.2, center)
    u = u_pattern(state, RING6, K=1.0, kappa=0.1, omega_d=0.2, center=center,
                  harmonic_gains=(0.1, -0.5))
    assert np.max(np.abs(u)) < 1e-10


def test_pattern_zero_at_three_cluster_arrangement():
    # Phases advance 120 deg per ring position; pairs (k, k+3) coincide.
    thetas = np.arange(6) * 2.0 * np.pi / 3.0
    state = state_on_circle(thetas, 0.2, 0.0j)
    u = u_pattern(state, RING6, K=1.0, kappa=0.1, omega_d=0.2, center=0.0j,
                  harmonic_gains=(0.1, 0.1, -0.5))
    assert np.max(np.abs(u)) < 1e-10


def test_pattern_zero_at_splay():
    state = state_on_circle(SPLAY6, 0.2, 0.0j)
    u = u_pattern(state, RING6, K=1.0, kappa=0.1, omega_d=0.2, center=0.0j,
                  harmonic_gains=(0.1, 0.1, 0.1, 0.1, 0.1, -0.5))
    assert np.max(np.abs(u)) < 1e-10


def test_subgroup_zero_at_blockwise_circles():
    graph = block_diagonal([RING4, FULL3])
    blocks = ((0, 1, 2, 3), (4, 5, 6))
    omega_ds = (0.2, 0.4)
    centers = (0.0j, 30.0 + 0.0j)
    thetas = np.concatenate([np.full(4, 0.3), np.full(3, 1.2)])
    positions = np.concatenate([
        circle_positions(thetas[:4], 5.0, centers[0]),
        circle_positions(thetas[4:], 2.5, centers[1]),
    ])
    omegas = np.concatenate([np.full(4, 0.2), np.full(3, 0.4)])
    state = SwarmState(positions, thetas, omegas)
    u = u_subgroup(state, graph, blocks, K=-1.0, kappa=0.5,
                   omega_ds=omega_ds, centers=centers)
    assert np.max(np.abs(u)) < 1e-10


def test_multilevel_zero_at_common_heading_circles():
    graph = block_diagonal([RING4, FULL3])
    blocks = ((0, 1, 2, 3), (4, 5, 6))
    centers = (0.0j, 30.0 + 0.0j)
    theta = 0.8
    thetas = np.full(7, theta)
    positions = np.concatenate([
        circle_positions(thetas[:4], 5.0, centers[0]),
        circle_positions(thetas[4:], 5.0, centers[1]),
    ])
    state = SwarmState(positions, thetas, np.full(7, 0.2))
    u = u_multilevel(state, graph, blocks, K=-1.0, kappa=0.5, omega_d=0.2,
                     centers=centers, intra_graph=complete_graph(7))
    assert np.max(np.abs(u)) < 1e-10


def random_state(rng, n=6):
    return SwarmState(
        positions=rng.uniform(-5, 5, n) + 1j * rng.uniform(-5, 5, n),
        headings=rng.uniform(-np.pi, np.pi, n),
        omegas=rng.uniform(-1, 1, n),
    )


def test_single_harmonic_pattern_equals_common_circle():
    # With one harmonic gain the pattern law collapses to the plain circle
    # law at phase gain K * K_1.
    rng = np.random.default_rng(3)
    center = 1.0 - 2.0j
    for _ in range(10):
        state = random_state(rng)
        u_p = u_pattern(state, RING6, K=2.0, kappa=0.3, omega_d=0.5,
                        center=center, harmonic_gains=(-0.3,))
        u_c = u_common_circle(state, RING6, K=-0.6, kappa=0.3, omega_d=0.5,
                              center=center)
        assert np.max(np.abs(u_p - u_c)) < 1e-12


def test_rotation_about_center_leaves_controls_unchanged():
    rng = np.random.default_rng(8)
    center = 20.0 + 5.0j
    alpha = 0.7
    rot = np.exp(1j * alpha)
    for _ in range(10):
        state = random_state(rng)
        turned = SwarmState(
            positions=center + rot * (state.positions - center),
            headings=state.headings + alpha,
            omegas=state.omegas,
        )
        for law_kwargs in (
            dict(K=0.4, kappa=0.2, omega_d=0.3, center=center),
            dict(K=-0.4, kappa=0.2, omega_d=0.3, center=center),
        ):
            u0 = u_common_circle(state, RING6, **law_kwargs)
            u1 = u_common_circle(turned, RING6, **law_kwargs)
            assert np.max(np.abs(u0 - u1)) < 1e-10
        u0 = u_pattern(state, RING6, K=1.0, kappa=0.1, omega_d=0.2,
                       center=center, harmonic_gains=(0.1, -0.5))
        u1 = u_pattern(turned, RING6, K=1.0, kappa=0.1, omega_d=0.2,
                       center=center, harmonic_gains=(0.1, -0.5))
        assert np.max(np.abs(u0 - u1)) < 1e-10


def test_heading_translation_leaves_individual_laws_unchanged():
    rng = np.random.default_rng(9)
    state = random_state(rng)
    shifted = SwarmState(state.positions, state.headings + 1.3, state.omegas)
    for mode, K in (("balance", 1.0), ("sync", -1.0)):
        u0 = u_individual(state, RING6, K=K, omega_d=0.2, mode=mode)
        u1 = u_individual(shifted, RING6, K=K, omega_d=0.2, mode=mode)
        assert np.max(np.abs(u0 - u1)) < 1e-10


@pytest.mark.parametrize("config, message", [
    (ControllerConfig(law="drift", K=1.0), "unknown law"),
    (ControllerConfig(law="individual_balance", K=-1.0), "requires K > 0"),
    (ControllerConfig(law="individual_sync", K=1.0), "requires K < 0"),
    (ControllerConfig(law="common_circle", K=0.0, kappa=0.1, omega_d=0.2,
                      center=0.0j), "nonzero phase gain"),
    (ControllerConfig(law="common_circle", K=1.0, omega_d=0.2, center=0.0j),
     "kappa > 0"),
    (ControllerConfig(law="common_circle", K=1.0, kappa=-0.1, omega_d=0.2,
                      center=0.0j), "kappa > 0"),
    (ControllerConfig(law="common_circle", K=1.0, kappa=0.1, omega_d=0.2),
     "requires a circle center"),
    (ControllerConfig(law="common_circle", K=1.0, kappa=0.1, omega_d=-0.2,
                      center=0.0j), "Omega_d > 0"),
    (ControllerConfig(law="common_circle", K=1.0, kappa=0.1, omega_d=0.2,
                      center=(0.0j, 1.0j)), "single center"),
    (ControllerConfig(law="pattern", K=1.0, kappa=0.1, omega_d=0.2,
                      center=0.0j), "requires harmonic gains"),
    (ControllerConfig(law="pattern", K=1.0, kappa=0.1, omega_d=0.2,
                      center=0.0j, harmonic_gains=(0.1, 0.1, 0.1, -0.5)),
     "must divide the agent count"),
    (ControllerConfig(law="individual_balance", K=1.0, u_max=0.0),
     "u_max must be positive"),
])
def test_validation_rejections_on_ring(config, message):
    with pytest.raises(ValueError, match=message):
        validate_config(config, RING6, warn=False)


def test_subgroup_validation_rejections():
    graph = block_diagonal([RING4, FULL3])
    good = dict(law="subgroup", K=-1.0, kappa=0.5,
                omega_d=(0.2, 0.4), center=(0.0j, 30.0 + 0.0j),
                blocks=((0, 1, 2, 3), (4, 5, 6)))

    with pytest.raises(ValueError, match="requires an agent partition"):
        validate_config(
            ControllerConfig(**{**good, "blocks": None}), graph, warn=False)
    with pytest.raises(ValueError, match="partition the 7 agents"):
        validate_config(
            ControllerConfig(**{**good, "blocks": ((0, 1, 2), (4, 5, 6))}),
            graph, warn=False)
    with pytest.raises(ValueError, match="one center per block"):
        validate_config(
            ControllerConfig(**{**good, "center": (0.0j,)}), graph,
            warn=False)
    with pytest.raises(ValueError, match="one Omega_d per block"):
        validate_config(
            ControllerConfig(**{**good, "omega_d": 0.2}), graph, warn=False)
    with pytest.raises(ValueError, match="every block Omega_d > 0"):
        validate_config(
            ControllerConfig(**{**good, "omega_d": (0.2, -0.4)}), graph,
            warn=False)
    with pytest.raises(ValueError, match="crosses declared blocks"):
        validate_config(
            ControllerConfig(**{**good, "blocks": ((0, 1, 2, 4), (3, 5, 6))}),
            graph, warn=False)


def test_multilevel_intra_size_mismatch_rejected():
    graph = block_diagonal([RING4, FULL3])
    config = ControllerConfig(
        law="multilevel", K=-1.0, kappa=0.5, omega_d=0.2,
        center=(0.0j, 30.0 + 0.0j), blocks=((0, 1, 2, 3), (4, 5, 6)),
        intra_graph=complete_graph(6))
    with pytest.raises(ValueError, match="intra-layer graph has 6 vertices"):
        validate_config(config, graph, warn=False)


def test_disconnected_graph_warns_for_plain_laws_only():
    two_triangles = from_circulant_row([2, 0, -1, 0, -1, 0])
    with pytest.warns(UserWarning, match="not connected"):
        validate_config(
            ControllerConfig(law="individual_sync", K=-1.0, omega_d=0.2),
            two_triangles)

    graph = block_diagonal([RING4, FULL3])
    config = ControllerConfig(
        law="subgroup", K=-1.0, kappa=0.5, omega_d=(0.2, 0.4),
        center=(0.0j, 30.0 + 0.0j), blocks=((0, 1, 2, 3), (4, 5, 6)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        validate_config(config, graph)


def test_noncirculant_graph_warns_on_balance_side():
    with pytest.warns(UserWarning, match="circulant"):
        validate_config(
            ControllerConfig(law="individual_balance", K=1.0, omega_d=0.2),
            PATH3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        validate_config(
            ControllerConfig(law="individual_sync", K=-1.0, omega_d=0.2),
            PATH3)


def test_block_internal_connectivity_warning():
    graph = block_diagonal([PATH3, FULL3])
    config = ControllerConfig(
        law="subgroup", K=-1.0, kappa=0.5, omega_d=(0.2, 0.4),
        center=(0.0j, 30.0j), blocks=((0, 1, 2), (3, 4, 5)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        validate_config(config, graph)

    config = ControllerConfig(
        law="subgroup", K=1.0, kappa=0.5, omega_d=(0.2, 0.4),
        center=(0.0j, 30.0j), blocks=((0, 1, 2), (3, 4, 5)))
    with pytest.warns(UserWarning, match="not circulant"):
        validate_config(config, graph)

    two_triangles = from_circulant_row([2, 0, -1, 0, -1, 0])
    config = ControllerConfig(
        law="subgroup", K=-1.0, kappa=0.5, omega_d=(0.2,),
        center=(0.0j,), blocks=((0, 1, 2, 3, 4, 5),))
    with pytest.warns(UserWarning, match="not internally connected"):
        validate_config(config, two_triangles)


def test_saturation_clips_symmetrically():
    rng = np.random.default_rng(1)
    state = random_state(rng)
    base = ControllerConfig(law="individual_balance", K=5.0, omega_d=0.2)
    capped = ControllerConfig(law="individual_balance", K=5.0, omega_d=0.2,
                              u_max=0.1)
    u_free = control_vector(base, RING6, state)
    u_capped = control_vector(capped, RING6, state)
    assert np.max(np.abs(u_free)) > 0.1
    assert np.max(np.abs(u_capped)) <= 0.1 + 1e-15
    assert u_capped == pytest.approx(np.clip(u_free, -0.1, 0.1), abs=1e-15)


def test_bound_controller_rejects_size_mismatch():
    controller = make_controls(
        ControllerConfig(law="individual_sync", K=-1.0, omega_d=0.2), RING6)
    state = SwarmState(np.zeros(4, dtype=complex), np.zeros(4), np.zeros(4))
    with pytest.raises(ValueError, match="state has 4 agents"):
        controller(state)


def test_u_individual_rejects_unknown_mode():
    state = SwarmState(np.zeros(6, dtype=complex), SPLAY6, np.zeros(6))
    with pytest.raises(ValueError, match="mode must be"):
        u_individual(state, RING6, K=1.0, omega_d=0.2, mode="spin")


def test_per_agent_targets_individual():
    config = ControllerConfig(law="individual_balance", K=1.0, omega_d=0.3)
    rho, omd, centers = per_agent_targets(config, 6)
    assert rho is None and centers is None
    assert omd == pytest.approx(np.full(6, 0.3))


def test_per_agent_targets_common_circle():
    config = ControllerConfig(law="common_circle", K=-1.0, kappa=0.1,
                              omega_d=0.2, center=2.0 + 1.0j)
    rho, omd, centers = per_agent_targets(config, 4)
    assert rho == pytest.approx(np.full(4, 5.0))
    assert omd == pytest.approx(np.full(4, 0.2))
    assert centers == pytest.approx(np.full(4, 2.0 + 1.0j))


def test_per_agent_targets_block_laws():
    config = ControllerConfig(
        law="subgroup", K=-1.0, kappa=0.5, omega_d=(0.2, 0.4),
        center=(0.0j, 30.0 + 0.0j), blocks=((0, 1, 2, 3), (4, 5, 6)))
    rho, omd, centers = per_agent_targets(config, 7)
    assert rho == pytest.approx([5.0] * 4 + [2.5] * 3)
    assert omd == pytest.approx([0.2] * 4 + [0.4] * 3)
    assert centers[4:] == pytest.approx(np.full(3, 30.0 + 0.0j))

    config = ControllerConfig(
        law="multilevel", K=-1.0, kappa=0.5, omega_d=0.2,
        center=(0.0j, 30.0 + 0.0j), blocks=((0, 1, 2, 3), (4, 5, 6)))
    rho, omd, centers = per_agent_targets(config, 7)
    assert rho == pytest.approx(np.full(7, 5.0))
    assert centers[:4] == pytest.approx(np.full(4, 0.0j))


@pytest.mark.parametrize("config, kind", [
    (ControllerConfig(law="individual_balance", K=1.0), "V1"),
    (ControllerConfig(law="individual_sync", K=-1.0), "V2"),
    (ControllerConfig(law="pattern", K=1.0, harmonic_gains=(0.1, -0.5)), "V"),
    (ControllerConfig(law="common_circle", K=1.0), "U1"),
    (ControllerConfig(law="common_circle", K=-1.0), "U2"),
    (ControllerConfig(law="subgroup", K=-1.0), "U2_blocks"),
    (ControllerConfig(law="multilevel", K=1.0), "U1_combined"),
])
def test_composite_kind_labels(config, kind):
    assert composite_kind_for(config) == kind
