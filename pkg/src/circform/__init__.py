"""Collective circular motion of unit-speed planar agents.

Simulation and verification of graph-coupled feedback laws that steer
second-order steering agents into synchronized, balanced, and clustered
circular formations.
"""

from .controllers import (ControllerConfig, control_vector, lyapunov_value,
                          make_controls, make_lyapunov, potential_report,
                          u_common_circle, u_individual, u_multilevel,
                          u_pattern, u_subgroup, validate_config)
from .graphs import (CirculantSpectrum, InteractionGraph, block_diagonal,
                     circulant_spectrum, complete_graph, from_circulant_row,
                     from_edges, induced_subgraph, lambda_max,
                     laplacian_eigenvalues)
from .model import (AgentState, SwarmDerivative, SwarmState, derivative,
                    flatten, planar_inner, unflatten)
from .potentials import (PhaseStatistics, PotentialReport, composite,
                         g_potential, grad_w_m, order_parameter,
                         phase_statistics, s_potential, w_m, w_pattern)
from .scenario import (Scenario, ScenarioError, bundled_scenario_names,
                       find_scenario, load_bundled, parse_scenario,
                       scenario_to_yaml, serialize_scenario)
from .sim import (ConvergenceReport, IntegrationSettings, SimulationDiverged,
                  Thresholds, Trajectory, lyapunov_series, pattern_residuals,
                  run, simulate, step)

__version__ = "0.1.0"

__all__ = [
    "AgentState", "CirculantSpectrum", "ControllerConfig",
    "ConvergenceReport", "IntegrationSettings", "InteractionGraph",
    "PhaseStatistics", "PotentialReport", "Scenario", "ScenarioError",
    "SimulationDiverged", "SwarmDerivative", "SwarmState", "Thresholds",
    "Trajectory", "block_diagonal", "bundled_scenario_names",
    "circulant_spectrum", "complete_graph", "composite", "control_vector",
    "derivative", "find_scenario", "flatten", "from_circulant_row",
    "from_edges", "g_potential", "grad_w_m", "induced_subgraph",
    "lambda_max", "laplacian_eigenvalues", "load_bundled",
    "lyapunov_series", "lyapunov_value", "make_controls", "make_lyapunov",
    "order_parameter", "parse_scenario", "pattern_residuals",
    "phase_statistics", "planar_inner", "potential_report", "run",
    "s_potential", "scenario_to_yaml", "serialize_scenario", "simulate",
    "step", "u_common_circle", "u_individual", "u_multilevel", "u_pattern",
    "u_subgroup", "unflatten", "validate_config", "w_m", "w_pattern",
]
