"""Phase-order statistics and the potentials driving the feedback laws.

All phase structure is measured through the Laplacian quadratic form

    W_m(theta) = 0.5 * <e^(i*m*theta), L e^(i*m*theta)>,

with the planar inner product <w, z> = Re(conj(w)^T z).  W_m is bounded by
0 <= W_m <= (N/2) * lambda_max; the upper bound is attained only when
e^(i*m*theta) is a lambda_max eigenvector, the lower bound when the scaled
phases m*theta are synchronized (and the graph connected).

The per-agent phase coupling term is

    coupling_m(theta)_k = -sum_{j in N_k} sin(m*(theta_j - theta_k)).

This equals <i*e^(i*m*theta_k), L_k e^(i*m*theta)> and is what the feedback
laws consume.  The literal partial derivative of W_m carries a chain-rule
factor m on top of it:  dW_m/dtheta_k = m * coupling_m(theta)_k.  The
finite-difference tests pin this scaling.  The coupling terms sum to zero
over agents for any graph.

The remaining ingredients are the angular-velocity disagreement

    G(omega) = 0.5 * sum_k (omega_k - Omega_d)^2

and the circle tracking potential

    S(r, theta) = 0.5 * sum_k |r_k - c_d + i*rho_d*e^(i*theta_k)|^2,

zero exactly when every agent sits on the circle of radius rho_d around
c_d with heading tangent to it (anticlockwise orientation).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import InteractionGraph

COMPOSITE_KINDS = ("V1", "V2", "U1", "U2", "V")


@dataclass(frozen=True)
class PhaseStatistics:
    """Order parameters p_m = (1/(m*N)) * sum_k e^(i*m*theta_k).

    ``values[j]`` is p_m for m = orders[j]; ``magnitudes`` are the moduli
    (each bounded by 1/m) and ``psi`` is the argument of the first-order
    phase centroid.
    """

    orders: tuple
    values: np.ndarray
    magnitudes: np.ndarray
    psi: float


@dataclass(frozen=True)
class PotentialReport:
    """Potential values evaluated at a single state."""

    w_values: dict
    g_value: float
    s_value: float | None
    composite_kind: str
    composite_value: float
    lambda_max: float


def order_parameter(thetas, m: int = 1) -> complex:
    """Scaled order parameter p_m; |p_m| <= 1/m with equality at sync."""
    thetas = np.asarray(thetas, dtype=float)
    if m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    return complex(np.mean(np.exp(1j * m * thetas)) / m)


def phase_statistics(thetas, orders=(1,)) -> PhaseStatistics:
    thetas = np.asarray(thetas, dtype=float)
    orders = tuple(int(m) for m in orders)
    values = np.array([order_parameter(thetas, m) for m in orders])
    first = order_parameter(thetas, 1)
    return PhaseStatistics(
        orders=orders,
        values=values,
        magnitudes=np.abs(values),
        psi=float(np.angle(first)) if abs(first) > 0.0 else 0.0,
    )


def w_m(thetas, graph: InteractionGraph, m: int = 1) -> float:
    """Laplacian phase potential W_m = 0.5 * <e^(imθ), L e^(imθ)>."""
    thetas = np.asarray(thetas, dtype=float)
    if m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    if thetas.shape != (graph.n,):
        raise ValueError(
            f"heading count {thetas.shape} does not match graph size {graph.n}"
        )
    z = np.exp(1j * m * thetas)
    return float(np.real(np.conj(z) @ (graph.laplacian @ z))) * 0.5


def grad_w_m(thetas, graph: InteractionGraph, m: int = 1) -> np.ndarray:
    """Phase coupling term -sum_{j in N_k} sin(m*(theta_j - theta_k)).

    The true gradient of :func:`w_m` is m times this vector; the feedback
    laws consume the coupling term directly.  Components sum to zero.
    """
    thetas = np.asarray(thetas, dtype=float)
    if m < 1:
        raise ValueError(f"order must be a positive integer, got {m}")
    if thetas.shape != (graph.n,):
        raise ValueError(
            f"heading count {thetas.shape} does not match graph size {graph.n}"
        )
    c = np.cos(m * thetas)
    s = np.sin(m * thetas)
    a = graph.adjacency
    return s * (a @ c) - c * (a @ s)


def g_potential(omegas, omega_d: float) -> float:
    """Angular-velocity disagreement 0.5 * sum_k (omega_k - Omega_d)^2."""
    omegas = np.asarray(omegas, dtype=float)
    return float(0.5 * np.sum((omegas - omega_d) ** 2))


def s_potential(positions, thetas, radius: float, center: complex) -> float:
    """Circle tracking potential, zero iff r_k = c_d - i*rho_d*e^(iθ_k)."""
    if radius <= 0.0:
        raise ValueError(f"circle radius must be positive, got {radius}")
    positions = np.asarray(positions, dtype=complex)
    thetas = np.asarray(thetas, dtype=float)
    if positions.shape != thetas.shape:
        raise ValueError(
            f"positions {positions.shape} and headings {thetas.shape} disagree"
        )
    d = positions - center + 1j * radius * np.exp(1j * thetas)
    return float(0.5 * np.sum(np.abs(d) ** 2))


def _validate_harmonic_gains(harmonic_gains) -> tuple:
    gains = tuple(float(g) for g in harmonic_gains)
    pattern_order = len(gains)
    if pattern_order < 1:
        raise ValueError("at least one harmonic gain required")
    for m, gain in enumerate(gains[:-1], start=1):
        if gain <= 0.0:
            raise ValueError(
                f"harmonic gain K_{m} must be > 0 below the pattern order, "
                f"got {gain}"
            )
    if gains[-1] >= 0.0:
        raise ValueError(
            f"harmonic gain K_{pattern_order} at the pattern order must be "
            f"< 0, got {gains[-1]}"
        )
    return gains


def w_pattern(thetas, graph: InteractionGraph, harmonic_gains) -> float:
    """Pattern potential selecting the (M, N) arrangement.

    With gains (K_1, ..., K_M), K_m > 0 for m < M and K_M < 0:

        sum_{m<M} (K_m/m^2) * ((N/2)*lambda_max - W_m)  -  (K_M/M^2) * W_M

    Nonnegative; zero exactly when every W_m for m < M sits at the balanced
    maximum and W_M at the synchronized minimum.
    """
    gains = _validate_harmonic_gains(harmonic_gains)
    pattern_order = len(gains)
    bound = 0.5 * graph.n * graph.lambda_max
    total = 0.0
    for m, gain in enumerate(gains, start=1):
        value = w_m(thetas, graph, m)
        if m < pattern_order:
            total += gain / m**2 * (bound - value)
        else:
            total -= gain / m**2 * value
    return total


def composite(kind: str, *, graph: InteractionGraph, thetas, omegas,
              K: float, omega_d: float, positions=None, kappa=None,
              center=None, harmonic_gains=None) -> float:
    """Composite potential matched to a feedback law.

    Kinds:
      V1  balance side,   K > 0:  K*((N/2)*lam_max - W_1) + G
      V2  sync side,      K < 0:  -K*W_1 + G
      U1  circle balance, K > 0, kappa > 0:  kappa*S + rho*K*((N/2)*lam_max - W_1) + rho^3*G
      U2  circle sync,    K < 0, kappa > 0:  kappa*S - rho*K*W_1 + rho^3*G
      V   circle pattern, K > 0, kappa > 0, harmonic gains per w_pattern

    rho = 1/Omega_d; the circle kinds require Omega_d > 0 and a center.
    Gain signs are validated against the kind.
    """
    if kind not in COMPOSITE_KINDS:
        raise ValueError(f"unknown composite kind {kind!r}; expected one of "
                         f"{COMPOSITE_KINDS}")
    thetas = np.asarray(thetas, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    g = g_potential(omegas, omega_d)
    bound = 0.5 * graph.n * graph.lambda_max

    if kind == "V1":
        if K <= 0.0:
            raise ValueError(f"composite V1 requires gain K > 0, got {K}")
        return K * (bound - w_m(thetas, graph, 1)) + g
    if kind == "V2":
        if K >= 0.0:
            raise ValueError(f"composite V2 requires gain K < 0, got {K}")
        return -K * w_m(thetas, graph, 1) + g

    # Circle-tracking kinds from here on.
    if kappa is None or kappa <= 0.0:
        raise ValueError(f"composite {kind} requires kappa > 0, got {kappa}")
    if omega_d <= 0.0:
        raise ValueError(
            f"composite {kind} requires Omega_d > 0, got {omega_d}"
        )
    if positions is None or center is None:
        raise ValueError(f"composite {kind} requires positions and a center")
    rho = 1.0 / omega_d
    s = s_potential(positions, thetas, rho, center)

    if kind == "U1":
        if K <= 0.0:
            raise ValueError(f"composite U1 requires gain K > 0, got {K}")
        w_term = K * (bound - w_m(thetas, graph, 1))
    elif kind == "U2":
        if K >= 0.0:
            raise ValueError(f"composite U2 requires gain K < 0, got {K}")
        w_term = -K * w_m(thetas, graph, 1)
    else:
        if K <= 0.0:
            raise ValueError(f"composite V requires gain K > 0, got {K}")
        if harmonic_gains is None:
            raise ValueError("composite V requires harmonic gains")
        w_term = K * w_pattern(thetas, graph, harmonic_gains)
    return kappa * s + rho * w_term + rho**3 * g
