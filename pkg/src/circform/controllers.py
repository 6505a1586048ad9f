"""Feedback laws steering unit-speed agents into circular formations.

Every law acts through the angular-velocity integrator (u = domega/dt) and
combines up to three ingredients:

  * velocity regulation toward a target angular velocity,
  * the phase coupling term of a Laplacian potential (see ``potentials``),
  * for circle-tracking laws, a position term <r_k - c_d, e^(i*theta_k)>
    pulling the agent onto the target circle.

Law catalogue (gain conditions validated, scenario terms in parentheses):

  individual_balance  u_k = -K*((omega_k - Omega_d) - coupling_k),  K > 0
                      phase balancing, each agent on its own circle
  individual_sync     u_k =  K*((omega_k - Omega_d) + coupling_k),  K < 0
                      phase synchronization, own circles
  common_circle       u_k = -kappa*rho_d*(omega_k - Omega_d)
                            + Omega_d^2*(kappa*<r_k - c_d, e^(i theta_k)>
                                         + K*coupling_k)
                      kappa > 0, Omega_d > 0, rho_d = 1/Omega_d;
                      K > 0 balances phases, K < 0 synchronizes them
  pattern             common_circle with the coupling replaced by
                      sum_{m=1..M} (K_m/m) * coupling_m; K > 0, K_m > 0 for
                      m < M, K_M < 0 selects the (M, N) cluster pattern
  subgroup            common_circle applied blockwise: each block has its
                      own circle (center, angular velocity) and an internal
                      graph; no edges cross blocks
  multilevel          blockwise centers with a shared Omega_d, plus an
                      optional second all-to-all coupling layer that aligns
                      phases across blocks

The pattern weights K_m/m are the pattern-potential weights K_m/m^2 applied
to the true gradient m*coupling_m; with them the matched composite decreases
exactly at rate kappa*rho_d^4*sum_k(omega_k - Omega_d)^2 along trajectories.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graphs import InteractionGraph, induced_subgraph
from .model import SwarmState
from .potentials import PotentialReport, _validate_harmonic_gains, w_m

LAWS = ("individual_balance", "individual_sync", "common_circle",
        "pattern", "subgroup", "multilevel")

_BLOCK_LAWS = ("subgroup", "multilevel")
_CIRCLE_LAWS = ("common_circle", "pattern") + _BLOCK_LAWS


@dataclass(frozen=True)
class ControllerConfig:
    """Declarative description of one feedback law.

    ``omega_d`` and ``center`` are scalars for the single-circle laws and
    per-block tuples for the block laws (``multilevel`` keeps a scalar
    ``omega_d`` so all blocks share one radius).  ``blocks`` holds 0-based
    agent indices.  ``u_max`` enables symmetric saturation when set; it is
    off by default and outside every stability guarantee.
    """

    law: str
    K: float
    omega_d: float | tuple = 0.0
    kappa: float | None = None
    center: complex | tuple | None = None
    harmonic_gains: tuple | None = None
    blocks: tuple | None = None
    intra_graph: InteractionGraph | None = None
    u_max: float | None = None

    @property
    def pattern_order(self) -> int | None:
        if self.harmonic_gains is None:
            return None
        return len(self.harmonic_gains)


def _check_blocks(blocks, n: int) -> None:
    flat = [k for block in blocks for k in block]
    if sorted(flat) != list(range(n)):
        raise ValueError(
            f"blocks must partition the {n} agents exactly; got {blocks}"
        )
    if any(len(block) == 0 for block in blocks):
        raise ValueError("empty blocks are not allowed")


def _block_ids(blocks, n: int) -> np.ndarray:
    ids = np.empty(n, dtype=int)
    for b, block in enumerate(blocks):
        ids[list(block)] = b
    return ids


def _warn_structure(config: ControllerConfig, graph: InteractionGraph) -> None:
    if not graph.is_connected and config.law not in _BLOCK_LAWS:
        # Block laws run one consensus per block; only the per-block
        # connectivity checked below matters for them.
        warnings.warn(
            f"graph is not connected; consensus guarantees for law "
            f"{config.law} do not apply",
            stacklevel=3,
        )
    balance_side = (
        config.law == "individual_balance"
        or config.law == "pattern"
        or (config.law == "common_circle" and config.K > 0)
    )
    if balance_side and not graph.is_circulant:
        warnings.warn(
            "balancing relies on the circulant structure of the graph; "
            "the maximum of the phase potential may not be a balanced set "
            "on this graph",
            stacklevel=3,
        )
    if config.law in _BLOCK_LAWS and config.blocks is not None:
        for b, block in enumerate(config.blocks):
            sub = induced_subgraph(graph, list(block))
            if not sub.is_connected:
                warnings.warn(
                    f"block {b + 1} is not internally connected; its "
                    "agents cannot reach agreement",
                    stacklevel=3,
                )
            elif config.K > 0 and not sub.is_circulant:
                warnings.warn(
                    f"block {b + 1} is not circulant; blockwise balancing "
                    "is not guaranteed",
                    stacklevel=3,
                )


def validate_config(config: ControllerConfig, graph: InteractionGraph,
                    warn: bool = True) -> None:
    """Check gain signs, target arity, and block structure for a law.

    Raises ValueError naming the violated condition.  Structural issues
    that break guarantees without making the law ill-defined (disconnected
    or non-circulant graphs) produce warnings instead.
    """
    law = config.law
    if law not in LAWS:
        raise ValueError(f"unknown law {config.law!r}; expected one of {LAWS}")
    n = graph.n

    if law == "individual_balance" and config.K <= 0.0:
        raise ValueError(
            f"law individual_balance requires K > 0, got {config.K}"
        )
    if law == "individual_sync" and config.K >= 0.0:
        raise ValueError(
            f"law individual_sync requires K < 0, got {config.K}"
        )

    if law in _CIRCLE_LAWS:
        if config.K == 0.0:
            raise ValueError(f"law {law} requires a nonzero phase gain K")
        if config.kappa is None or config.kappa <= 0.0:
            raise ValueError(
                f"law {law} requires kappa > 0, got {config.kappa}"
            )
        if config.center is None:
            raise ValueError(f"law {law} requires a circle center")

    if law in ("individual_balance", "individual_sync", "common_circle",
               "pattern", "multilevel"):
        if not np.isscalar(config.omega_d):
            raise ValueError(f"law {law} takes a single Omega_d")
        if law in _CIRCLE_LAWS and config.omega_d <= 0.0:
            raise ValueError(
                f"law {law} requires Omega_d > 0 (anticlockwise target "
                f"circle), got {config.omega_d}"
            )

    if law in ("common_circle", "pattern"):
        if isinstance(config.center, tuple):
            raise ValueError(f"law {law} takes a single center")

    if law == "pattern":
        if config.harmonic_gains is None:
            raise ValueError("law pattern requires harmonic gains K_1..K_M")
        _validate_harmonic_gains(config.harmonic_gains)
        order = len(config.harmonic_gains)
        if n % order != 0:
            raise ValueError(
                f"pattern order {order} must divide the agent count {n}"
            )

    if law in _BLOCK_LAWS:
        if config.blocks is None:
            raise ValueError(f"law {law} requires an agent partition")
        _check_blocks(config.blocks, n)
        n_blocks = len(config.blocks)
        if not isinstance(config.center, tuple) or len(config.center) != n_blocks:
            raise ValueError(
                f"law {law} requires one center per block "
                f"({n_blocks} blocks)"
            )
        ids = _block_ids(config.blocks, n)
        cross = np.argwhere(graph.adjacency * (ids[:, None] != ids[None, :]))
        if cross.size:
            j, k = cross[0]
            raise ValueError(
                f"edge ({j + 1}, {k + 1}) crosses declared blocks; the "
                "graph must be block-diagonal under the partition"
            )

    if law == "subgroup":
        n_blocks = len(config.blocks)
        if not isinstance(config.omega_d, tuple) or len(config.omega_d) != n_blocks:
            raise ValueError(
                f"law subgroup requires one Omega_d per block "
                f"({n_blocks} blocks)"
            )
        if any(w <= 0.0 for w in config.omega_d):
            raise ValueError(
                f"law subgroup requires every block Omega_d > 0, "
                f"got {config.omega_d}"
            )

    if law == "multilevel" and config.intra_graph is not None:
        if config.intra_graph.n != n:
            raise ValueError(
                f"intra-layer graph has {config.intra_graph.n} vertices, "
                f"expected {n}"
            )

    if config.u_max is not None and config.u_max <= 0.0:
        raise ValueError(f"u_max must be positive, got {config.u_max}")

    if warn:
        _warn_structure(config, graph)


def per_agent_targets(config: ControllerConfig, n: int):
    """Per-agent (radius, angular velocity, center) target arrays.

    Radius and center are None for the individual laws, which prescribe no
    particular circle in the plane.
    """
    if config.law in ("individual_balance", "individual_sync"):
        return None, np.full(n, float(config.omega_d)), None
    if config.law in ("common_circle", "pattern"):
        omd = np.full(n, float(config.omega_d))
        centers = np.full(n, complex(config.center))
        return 1.0 / omd, omd, centers
    ids = _block_ids(config.blocks, n)
    if config.law == "subgroup":
        omd = np.asarray(config.omega_d, dtype=float)[ids]
    else:
        omd = np.full(n, float(config.omega_d))
    centers = np.asarray(config.center, dtype=complex)[ids]
    return 1.0 / omd, omd, centers


def _coupling(a: np.ndarray, c: np.ndarray, s: np.ndarray) -> np.ndarray:
    # -sum_j a_kj * sin(theta_j - theta_k) given cos/sin of theta
    return s * (a @ c) - c * (a @ s)


class BoundController:
    """A law bound to a graph; callable on a SwarmState.

    ``raw(x, y, cos_t, sin_t, theta, omega)`` is the allocation-light entry
    point the integrator uses, with cos/sin of the headings precomputed.
    """

    def __init__(self, config: ControllerConfig, graph: InteractionGraph,
                 raw: Callable):
        self.config = config
        self.graph = graph
        self.raw = raw

    def __call__(self, state: SwarmState) -> np.ndarray:
        if state.n != self.graph.n:
            raise ValueError(
                f"state has {state.n} agents, graph has {self.graph.n}"
            )
        c = np.cos(state.headings)
        s = np.sin(state.headings)
        return self.raw(state.positions.real, state.positions.imag,
                        c, s, state.headings, state.omegas)


def make_controls(config: ControllerConfig, graph: InteractionGraph,
                  validate: bool = True) -> BoundController:
    """Bind a law to a graph, returning the control-vector evaluator.

    ``validate=False`` skips the gain and structure checks; it exists so
    that deliberately violated hypotheses can be simulated (for negative
    tests), not for regular use.
    """
    if validate:
        validate_config(config, graph)
    law = config.law
    a = graph.adjacency
    K = float(config.K)

    if law == "individual_balance":
        omega_d = float(config.omega_d)

        def raw(x, y, c, s, theta, omega):
            return K * (_coupling(a, c, s) - omega + omega_d)

    elif law == "individual_sync":
        omega_d = float(config.omega_d)

        def raw(x, y, c, s, theta, omega):
            return K * (omega - omega_d + _coupling(a, c, s))

    else:
        rho_k, omd_k, center_k = per_agent_targets(config, graph.n)
        kappa = float(config.kappa)
        cx = center_k.real
        cy = center_k.imag
        krho = kappa * rho_k
        omsq = omd_k**2

        if law == "pattern":
            weights = tuple(g / m for m, g in
                            enumerate(config.harmonic_gains, start=1))

            def phase(c, s, theta):
                total = weights[0] * _coupling(a, c, s)
                for m, w in enumerate(weights[1:], start=2):
                    cm = np.cos(m * theta)
                    sm = np.sin(m * theta)
                    total += w * _coupling(a, cm, sm)
                return total

        elif law == "multilevel" and config.intra_graph is not None:
            combined = a + config.intra_graph.adjacency

            def phase(c, s, theta):
                return _coupling(combined, c, s)

        else:

            def phase(c, s, theta):
                return _coupling(a, c, s)

        def raw(x, y, c, s, theta, omega):
            radial = (x - cx) * c + (y - cy) * s
            return (-krho * (omega - omd_k)
                    + omsq * (kappa * radial + K * phase(c, s, theta)))

    if config.u_max is not None:
        u_max = float(config.u_max)
        inner = raw

        def raw(x, y, c, s, theta, omega):
            return np.clip(inner(x, y, c, s, theta, omega), -u_max, u_max)

    return BoundController(config, graph, raw)


def control_vector(config: ControllerConfig, graph: InteractionGraph,
                   state: SwarmState) -> np.ndarray:
    """Control vector of a law at one state (validates on every call)."""
    return make_controls(config, graph)(state)


# Convenience entry points, one per law.

def u_individual(state: SwarmState, graph: InteractionGraph, K: float,
                 omega_d: float, mode: str = "balance") -> np.ndarray:
    if mode not in ("balance", "sync"):
        raise ValueError(f"mode must be 'balance' or 'sync', got {mode!r}")
    law = "individual_balance" if mode == "balance" else "individual_sync"
    return control_vector(
        ControllerConfig(law=law, K=K, omega_d=omega_d), graph, state)


def u_common_circle(state: SwarmState, graph: InteractionGraph, K: float,
                    kappa: float, omega_d: float,
                    center: complex) -> np.ndarray:
    config = ControllerConfig(law="common_circle", K=K, kappa=kappa,
                              omega_d=omega_d, center=complex(center))
    return control_vector(config, graph, state)


def u_pattern(state: SwarmState, graph: InteractionGraph, K: float,
              kappa: float, omega_d: float, center: complex,
              harmonic_gains) -> np.ndarray:
    config = ControllerConfig(law="pattern", K=K, kappa=kappa,
                              omega_d=omega_d, center=complex(center),
                              harmonic_gains=tuple(harmonic_gains))
    return control_vector(config, graph, state)


def u_subgroup(state: SwarmState, graph: InteractionGraph, blocks, K: float,
               kappa: float, omega_ds, centers) -> np.ndarray:
    config = ControllerConfig(
        law="subgroup", K=K, kappa=kappa,
        omega_d=tuple(float(w) for w in omega_ds),
        center=tuple(complex(c) for c in centers),
        blocks=tuple(tuple(b) for b in blocks))
    return control_vector(config, graph, state)


def u_multilevel(state: SwarmState, graph: InteractionGraph, blocks,
                 K: float, kappa: float, omega_d: float, centers,
                 intra_graph: InteractionGraph | None = None) -> np.ndarray:
    config = ControllerConfig(
        law="multilevel", K=K, kappa=kappa, omega_d=float(omega_d),
        center=tuple(complex(c) for c in centers),
        blocks=tuple(tuple(b) for b in blocks),
        intra_graph=intra_graph)
    return control_vector(config, graph, state)


def composite_kind_for(config: ControllerConfig) -> str:
    """Label of the composite potential matched to a law."""
    if config.law == "individual_balance":
        return "V1"
    if config.law == "individual_sync":
        return "V2"
    if config.law == "pattern":
        return "V"
    base = "U1" if config.K > 0 else "U2"
    if config.law == "subgroup":
        return base + "_blocks"
    if config.law == "multilevel":
        return base + "_combined"
    return base


class BoundLyapunov:
    """Law-matched composite potential bound to a graph.

    Decreases along closed-loop trajectories of the matching law; the
    simulator samples it every step to certify descent.
    """

    def __init__(self, config: ControllerConfig, graph: InteractionGraph,
                 kind: str, raw: Callable):
        self.config = config
        self.graph = graph
        self.kind = kind
        self.raw = raw

    def __call__(self, state: SwarmState) -> float:
        return self.raw(state.positions.real, state.positions.imag,
                        state.headings, state.omegas)


def _quad_half(mat: np.ndarray, c: np.ndarray, s: np.ndarray) -> float:
    # 0.5 * <e^(i theta), M e^(i theta)> via the real and imaginary parts
    return 0.5 * float(c @ (mat @ c) + s @ (mat @ s))


def make_lyapunov(config: ControllerConfig, graph: InteractionGraph,
                  validate: bool = True) -> BoundLyapunov:
    """Build the composite potential matched to a law.

    The returned value decreases at rate K*sum(omega-Omega_d)^2 (individual
    laws) or kappa*rho_d^4*sum(omega-Omega_d)^2 (circle laws) when gains
    satisfy the law's hypotheses.
    """
    if validate:
        validate_config(config, graph, warn=False)
    law = config.law
    lap = graph.laplacian
    K = float(config.K)
    n = graph.n

    if law in ("individual_balance", "individual_sync"):
        omega_d = float(config.omega_d)
        bound = 0.5 * n * graph.lambda_max
        # Matched to the law, not to the sign of K, so that a violated
        # gain hypothesis shows up as ascent rather than being masked.
        balance = law == "individual_balance"

        def raw(x, y, theta, omega):
            c = np.cos(theta)
            s = np.sin(theta)
            w1 = _quad_half(lap, c, s)
            g = 0.5 * float(np.sum((omega - omega_d) ** 2))
            if balance:
                return K * (bound - w1) + g
            return -K * w1 + g

    elif law in ("common_circle", "pattern"):
        omega_d = float(config.omega_d)
        rho = 1.0 / omega_d
        kappa = float(config.kappa)
        cx = float(np.real(config.center))
        cy = float(np.imag(config.center))
        bound = 0.5 * n * graph.lambda_max
        if law == "pattern":
            gains = config.harmonic_gains
            order = len(gains)

            def w_term(theta, c, s):
                total = 0.0
                for m, gain in enumerate(gains, start=1):
                    if m == 1:
                        wm = _quad_half(lap, c, s)
                    else:
                        wm = _quad_half(lap, np.cos(m * theta),
                                        np.sin(m * theta))
                    if m < order:
                        total += gain / m**2 * (bound - wm)
                    else:
                        total -= gain / m**2 * wm
                return K * total
        else:

            def w_term(theta, c, s):
                w1 = _quad_half(lap, c, s)
                if K > 0:
                    return K * (bound - w1)
                return -K * w1

        def raw(x, y, theta, omega):
            c = np.cos(theta)
            s = np.sin(theta)
            dx = x - cx - rho * s
            dy = y - cy + rho * c
            s_val = 0.5 * float(np.sum(dx * dx + dy * dy))
            g = 0.5 * float(np.sum((omega - omega_d) ** 2))
            return kappa * s_val + rho * w_term(theta, c, s) + rho**3 * g

    else:
        rho_k, omd_k, center_k = per_agent_targets(config, n)
        kappa = float(config.kappa)
        cx = center_k.real
        cy = center_k.imag
        if law == "multilevel":
            combined = lap.copy()
            if config.intra_graph is not None:
                combined = combined + config.intra_graph.laplacian
            lam = float(np.linalg.eigvalsh(combined)[-1])
            bound = 0.5 * n * lam
            rho = float(rho_k[0])
            omega_d = float(config.omega_d)

            def raw(x, y, theta, omega):
                c = np.cos(theta)
                s = np.sin(theta)
                w1 = _quad_half(combined, c, s)
                dx = x - cx - rho * s
                dy = y - cy + rho * c
                s_val = 0.5 * float(np.sum(dx * dx + dy * dy))
                g = 0.5 * float(np.sum((omega - omega_d) ** 2))
                if K > 0:
                    w_part = rho * K * (bound - w1)
                else:
                    w_part = -rho * K * w1
                return kappa * s_val + w_part + rho**3 * g

        else:
            # Blockwise sum of circle composites.  The W terms collapse to
            # one quadratic form with the block Laplacians scaled by their
            # block radius; the bound uses each block's own lambda_max.
            weighted = np.zeros_like(lap)
            bound_sum = 0.0
            for b, block in enumerate(config.blocks):
                idx = list(block)
                sub = induced_subgraph(graph, idx)
                rho_b = float(rho_k[idx[0]])
                weighted[np.ix_(idx, idx)] = rho_b * sub.laplacian
                bound_sum += rho_b * 0.5 * sub.n * sub.lambda_max
            rho3 = rho_k**3

            def raw(x, y, theta, omega):
                c = np.cos(theta)
                s = np.sin(theta)
                q = _quad_half(weighted, c, s)
                dx = x - cx - rho_k * s
                dy = y - cy + rho_k * c
                s_val = 0.5 * float(np.sum(dx * dx + dy * dy))
                g = 0.5 * float(np.sum(rho3 * (omega - omd_k) ** 2))
                if K > 0:
                    w_part = K * (bound_sum - q)
                else:
                    w_part = -K * q
                return kappa * s_val + w_part + g

    return BoundLyapunov(config, graph, composite_kind_for(config), raw)


def lyapunov_value(config: ControllerConfig, graph: InteractionGraph,
                   state: SwarmState) -> float:
    """Law-matched composite potential at one state."""
    return make_lyapunov(config, graph)(state)


def potential_report(config: ControllerConfig, graph: InteractionGraph,
                     state: SwarmState) -> PotentialReport:
    """All potential values relevant to a law at one state."""
    order = config.pattern_order or 1
    w_values = {m: w_m(state.headings, graph, m) for m in range(1, order + 1)}
    rho_k, omd_k, center_k = per_agent_targets(config, graph.n)
    g = float(0.5 * np.sum((state.omegas - omd_k) ** 2))
    if rho_k is None:
        s_val = None
    else:
        d = state.positions - center_k + 1j * rho_k * np.exp(1j * state.headings)
        s_val = float(0.5 * np.sum(np.abs(d) ** 2))
    lyap = make_lyapunov(config, graph)
    return PotentialReport(
        w_values=w_values,
        g_value=g,
        s_value=s_val,
        composite_kind=lyap.kind,
        composite_value=lyap(state),
        lambda_max=graph.lambda_max,
    )
