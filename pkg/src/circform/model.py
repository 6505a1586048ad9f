"""State containers and open-loop dynamics for unit-speed planar agents.

Each agent moves at unit speed along its heading and steers through an
angular-velocity integrator:

    dr_k/dt     = e^(i*theta_k)
    dtheta_k/dt = omega_k
    domega_k/dt = u_k

With u = 0 and omega_k != 0 an agent traces a circle of radius
1/|omega_k|, anticlockwise when omega_k > 0.

Positions are stored as complex numbers (x + i*y, meters).  Headings are
kept unwrapped: they accumulate beyond [0, 2*pi) so that winding is
observable.  The flat layout used by the integrator is agent-major,
(x_1, y_1, theta_1, omega_1, ..., x_N, y_N, theta_N, omega_N).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AgentState:
    position: complex
    heading: float
    angular_velocity: float


@dataclass
class SwarmState:
    """Positions, headings, and angular velocities of N agents at one time."""

    positions: np.ndarray
    headings: np.ndarray
    omegas: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.positions = np.asarray(self.positions, dtype=complex)
        self.headings = np.asarray(self.headings, dtype=float)
        self.omegas = np.asarray(self.omegas, dtype=float)
        n = self.positions.shape[0]
        if self.positions.ndim != 1 or n < 1:
            raise ValueError("positions must be a non-empty 1-d array")
        if self.headings.shape != (n,) or self.omegas.shape != (n,):
            raise ValueError(
                f"state arrays disagree on agent count: "
                f"{self.positions.shape}, {self.headings.shape}, {self.omegas.shape}"
            )
        for name, arr in (("positions", self.positions),
                          ("headings", self.headings),
                          ("omegas", self.omegas)):
            if not np.all(np.isfinite(arr if name != "positions"
                                      else arr.view(float))):
                raise ValueError(f"{name} contains non-finite values")
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def agent(self, k: int) -> AgentState:
        return AgentState(
            position=complex(self.positions[k]),
            heading=float(self.headings[k]),
            angular_velocity=float(self.omegas[k]),
        )

    def centroid(self) -> complex:
        return complex(np.mean(self.positions))

    def copy(self) -> "SwarmState":
        return SwarmState(
            positions=self.positions.copy(),
            headings=self.headings.copy(),
            omegas=self.omegas.copy(),
            time=self.time,
        )


@dataclass(frozen=True)
class SwarmDerivative:
    """Time derivative of a SwarmState under given controls."""

    d_positions: np.ndarray
    d_headings: np.ndarray
    d_omegas: np.ndarray


def derivative(state: SwarmState, controls) -> SwarmDerivative:
    """Open-loop derivative for a given control vector.

    ``|d_positions| == 1`` componentwise: agents never change speed.
    """
    u = np.asarray(controls, dtype=float)
    if u.shape != (state.n,):
        raise ValueError(
            f"controls shape {u.shape} does not match agent count {state.n}"
        )
    if not np.all(np.isfinite(u)):
        raise ValueError("controls contain non-finite values")
    return SwarmDerivative(
        d_positions=np.exp(1j * state.headings),
        d_headings=state.omegas.copy(),
        d_omegas=u,
    )


def flatten(state: SwarmState) -> np.ndarray:
    """Agent-major flat vector (x_1, y_1, theta_1, omega_1, ...)."""
    y = np.empty(4 * state.n)
    y[0::4] = state.positions.real
    y[1::4] = state.positions.imag
    y[2::4] = state.headings
    y[3::4] = state.omegas
    return y


def unflatten(y: np.ndarray, time: float = 0.0) -> SwarmState:
    """Inverse of :func:`flatten`."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] % 4 != 0 or y.shape[0] == 0:
        raise ValueError(f"flat state length {y.shape} is not a multiple of 4")
    return SwarmState(
        positions=y[0::4] + 1j * y[1::4],
        headings=y[2::4].copy(),
        omegas=y[3::4].copy(),
        time=time,
    )


def planar_inner(z1, z2):
    """Planar inner product Re(conj(z1) * z2), elementwise on arrays."""
    return np.real(np.conj(z1) * z2)
