"""Scenario files: parsing, validation, and construction of run inputs.

A scenario is a YAML document with a versioned ``format: 1`` header that
fully describes one simulation: the interaction graph, the initial swarm
state, the feedback law and its gains, integration settings, convergence
thresholds, and which artifacts to emit.  Bundled scenarios live under
``circform/scenarios/`` and double as format documentation.

Angles in scenario files are degrees (``headings_deg``); everything
internal is radians.  Unknown fields are rejected, not ignored, so typos
in gain names fail loudly.  All diagnostics carry the dotted path of the
offending field, e.g. ``controller.harmonic_gains[2]``.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .controllers import LAWS, ControllerConfig, validate_config
from .graphs import (InteractionGraph, block_diagonal, complete_graph,
                     from_circulant_row, from_edges)
from .model import SwarmState
from .sim import IntegrationSettings, Thresholds

FORMAT_VERSION = 1

_SCENARIO_KEYS = ("format", "name", "graph", "initial", "controller",
                  "integration", "thresholds", "outputs")


class ScenarioError(ValueError):
    """Scenario file rejected; ``path`` locates the offending field."""

    def __init__(self, path: str, problem: str):
        self.path = path
        super().__init__(f"{path}: {problem}")


def _require_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _reject_unknown(data: dict, allowed, path: str) -> None:
    unknown = [k for k in data if k not in allowed]
    if unknown:
        raise ScenarioError(
            f"{path}.{unknown[0]}" if path else str(unknown[0]),
            f"unknown field (accepted here: {', '.join(allowed)})")


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    return value


def _number_list(value, path: str) -> tuple:
    if not isinstance(value, (list, tuple)):
        raise ScenarioError(path, f"expected a list of numbers, got {value!r}")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _point(value, path: str) -> tuple:
    pair = _number_list(value, path)
    if len(pair) != 2:
        raise ScenarioError(path, f"expected an (x, y) pair, got {value!r}")
    return pair


# Graph specifications.  Exactly one of the three shapes:
#   graph: {circulant: [2, -1, 0, 0, 0, -1]}
#   graph: {n: 6, edges: [[1, 2], [2, 3], ...]}     # 1-based vertex labels
#   graph: {blocks: [{circulant: [...]}, ...]}       # block-diagonal union

@dataclass(frozen=True)
class GraphSpec:
    kind: str
    circulant: tuple | None = None
    n: int | None = None
    edges: tuple | None = None
    blocks: tuple = ()

    def build(self) -> InteractionGraph:
        if self.kind == "circulant":
            return from_circulant_row(self.circulant)
        if self.kind == "edges":
            return from_edges(self.n, self.edges)
        return block_diagonal([b.build() for b in self.blocks])

    def vertex_count(self) -> int:
        if self.kind == "circulant":
            return len(self.circulant)
        if self.kind == "edges":
            return self.n
        return sum(b.vertex_count() for b in self.blocks)

    def block_index_tuples(self) -> tuple | None:
        """0-based agent indices per block, or None for flat graphs."""
        if self.kind != "blocks":
            return None
        out, start = [], 0
        for b in self.blocks:
            size = b.vertex_count()
            out.append(tuple(range(start, start + size)))
            start += size
        return tuple(out)


def _parse_graph(data, path: str) -> GraphSpec:
    data = _require_mapping(data, path)
    if "circulant" in data:
        _reject_unknown(data, ("circulant",), path)
        row = _number_list(data["circulant"], f"{path}.circulant")
        return GraphSpec(kind="circulant", circulant=row)
    if "edges" in data:
        _reject_unknown(data, ("n", "edges"), path)
        if "n" not in data:
            raise ScenarioError(path, "edge-list graphs need an explicit n")
        n = _integer(data["n"], f"{path}.n")
        raw = data["edges"]
        if not isinstance(raw, (list, tuple)):
            raise ScenarioError(f"{path}.edges", "expected a list of pairs")
        edges = []
        for i, e in enumerate(raw):
            pair = _number_list(e, f"{path}.edges[{i}]")
            if len(pair) != 2 or any(v != int(v) for v in pair):
                raise ScenarioError(f"{path}.edges[{i}]",
                                    f"expected two integer labels, got {e!r}")
            edges.append((int(pair[0]), int(pair[1])))
        return GraphSpec(kind="edges", n=n, edges=tuple(edges))
    if "blocks" in data:
        _reject_unknown(data, ("blocks",), path)
        raw = data["blocks"]
        if not isinstance(raw, (list, tuple)) or len(raw) == 0:
            raise ScenarioError(f"{path}.blocks", "expected a non-empty list")
        blocks = tuple(_parse_graph(b, f"{path}.blocks[{i}]")
                       for i, b in enumerate(raw))
        if any(b.kind == "blocks" for b in blocks):
            raise ScenarioError(f"{path}.blocks", "blocks cannot nest")
        return GraphSpec(kind="blocks", blocks=blocks)
    raise ScenarioError(path, "expected one of: circulant, edges, blocks")


def _serialize_graph(spec: GraphSpec) -> dict:
    if spec.kind == "circulant":
        return {"circulant": list(spec.circulant)}
    if spec.kind == "edges":
        return {"n": spec.n, "edges": [list(e) for e in spec.edges]}
    return {"blocks": [_serialize_graph(b) for b in spec.blocks]}


# Initial conditions: either explicit arrays or a seeded random draw.
#   initial: {positions: [[x, y], ...], headings_deg: [...],
#             angular_velocities: [...]}
#   initial: {random: {seed: 7, position_box: [[xlo, xhi], [ylo, yhi]],
#             heading_deg: [lo, hi], angular_velocity: [lo, hi]}}

@dataclass(frozen=True)
class InitialSpec:
    positions: tuple | None = None
    headings_deg: tuple | None = None
    angular_velocities: tuple | None = None
    seed: int | None = None
    position_box: tuple | None = None
    heading_deg: tuple | None = None
    angular_velocity: tuple | None = None

    @property
    def is_random(self) -> bool:
        return self.seed is not None

    def build(self, n: int, seed: int | None = None) -> SwarmState:
        if not self.is_random:
            xy = np.array([complex(x, y) for x, y in self.positions])
            return SwarmState(
                positions=xy,
                headings=np.deg2rad(np.array(self.headings_deg, dtype=float)),
                omegas=np.array(self.angular_velocities, dtype=float))
        rng = np.random.default_rng(self.seed if seed is None else seed)
        (xlo, xhi), (ylo, yhi) = self.position_box
        x = rng.uniform(xlo, xhi, n)
        y = rng.uniform(ylo, yhi, n)
        th = np.deg2rad(rng.uniform(*self.heading_deg, n))
        om = rng.uniform(*self.angular_velocity, n)
        return SwarmState(positions=x + 1j * y, headings=th, omegas=om)


def _parse_initial(data, path: str) -> InitialSpec:
    data = _require_mapping(data, path)
    if "random" in data:
        _reject_unknown(data, ("random",), path)
        r = _require_mapping(data["random"], f"{path}.random")
        keys = ("seed", "position_box", "heading_deg", "angular_velocity")
        _reject_unknown(r, keys, f"{path}.random")
        missing = [k for k in keys if k not in r]
        if missing:
            raise ScenarioError(f"{path}.random", f"missing field {missing[0]}")
        box = r["position_box"]
        if not isinstance(box, (list, tuple)) or len(box) != 2:
            raise ScenarioError(f"{path}.random.position_box",
                                "expected [[xlo, xhi], [ylo, yhi]]")
        spec = InitialSpec(
            seed=_integer(r["seed"], f"{path}.random.seed"),
            position_box=tuple(
                _point(b, f"{path}.random.position_box[{i}]")
                for i, b in enumerate(box)),
            heading_deg=_point(r["heading_deg"], f"{path}.random.heading_deg"),
            angular_velocity=_point(r["angular_velocity"],
                                    f"{path}.random.angular_velocity"))
        ranges = (("position_box[0]", spec.position_box[0]),
                  ("position_box[1]", spec.position_box[1]),
                  ("heading_deg", spec.heading_deg),
                  ("angular_velocity", spec.angular_velocity))
        for rname, (lo, hi) in ranges:
            if not lo < hi:
                raise ScenarioError(f"{path}.random.{rname}",
                                    f"range [{lo}, {hi}] is empty")
        return spec
    keys = ("positions", "headings_deg", "angular_velocities")
    _reject_unknown(data, keys, path)
    missing = [k for k in keys if k not in data]
    if missing:
        raise ScenarioError(path, f"missing field {missing[0]}")
    raw_pos = data["positions"]
    if not isinstance(raw_pos, (list, tuple)):
        raise ScenarioError(f"{path}.positions", "expected a list of (x, y)")
    positions = tuple(_point(p, f"{path}.positions[{i}]")
                      for i, p in enumerate(raw_pos))
    headings = _number_list(data["headings_deg"], f"{path}.headings_deg")
    omegas = _number_list(data["angular_velocities"],
                          f"{path}.angular_velocities")
    if not (len(positions) == len(headings) == len(omegas)):
        raise ScenarioError(
            path, f"array lengths differ: {len(positions)} positions, "
            f"{len(headings)} headings_deg, {len(omegas)} angular_velocities")
    return InitialSpec(positions=positions, headings_deg=headings,
                       angular_velocities=omegas)


def _serialize_initial(spec: InitialSpec) -> dict:
    if spec.is_random:
        return {"random": {
            "seed": spec.seed,
            "position_box": [list(b) for b in spec.position_box],
            "heading_deg": list(spec.heading_deg),
            "angular_velocity": list(spec.angular_velocity)}}
    return {"positions": [list(p) for p in spec.positions],
            "headings_deg": list(spec.headings_deg),
            "angular_velocities": list(spec.angular_velocities)}


# Controller section: mirrors ControllerConfig.  Per-block laws take list
# values for Omega_d / c_d and derive block membership from the graph's
# block structure; `intra: all_to_all` adds the cross-block layer.

_CONTROLLER_KEYS = ("law", "K", "kappa", "Omega_d", "c_d",
                    "harmonic_gains", "intra", "u_max")


@dataclass(frozen=True)
class ControllerSpec:
    law: str
    K: float
    omega_d: float | tuple
    kappa: float | None = None
    c_d: tuple | None = None
    harmonic_gains: tuple | None = None
    intra: str | None = None
    u_max: float | None = None

    def build(self, graph_spec: GraphSpec) -> ControllerConfig:
        center = self.c_d
        if center is not None:
            if isinstance(center[0], tuple):
                center = tuple(complex(x, y) for x, y in center)
            else:
                center = complex(center[0], center[1])
        intra = None
        if self.intra == "all_to_all":
            intra = complete_graph(graph_spec.vertex_count())
        return ControllerConfig(
            law=self.law, K=self.K, omega_d=self.omega_d, kappa=self.kappa,
            center=center, harmonic_gains=self.harmonic_gains,
            blocks=graph_spec.block_index_tuples(), intra_graph=intra,
            u_max=self.u_max)


def _parse_controller(data, path: str) -> ControllerSpec:
    data = _require_mapping(data, path)
    _reject_unknown(data, _CONTROLLER_KEYS, path)
    for k in ("law", "K"):
        if k not in data:
            raise ScenarioError(path, f"missing field {k}")
    law = data["law"]
    if law not in LAWS:
        raise ScenarioError(f"{path}.law",
                            f"unknown law {law!r}; expected one of {LAWS}")
    K = _number(data["K"], f"{path}.K")

    omega_d = data.get("Omega_d")
    if omega_d is None:
        raise ScenarioError(path, "missing field Omega_d")
    if isinstance(omega_d, (list, tuple)):
        omega_d = _number_list(omega_d, f"{path}.Omega_d")
    else:
        omega_d = _number(omega_d, f"{path}.Omega_d")

    kappa = None
    if "kappa" in data:
        kappa = _number(data["kappa"], f"{path}.kappa")

    c_d = None
    if "c_d" in data:
        raw = data["c_d"]
        if not isinstance(raw, (list, tuple)) or not raw:
            raise ScenarioError(f"{path}.c_d", f"expected a point, got {raw!r}")
        if isinstance(raw[0], (list, tuple)):
            c_d = tuple(_point(p, f"{path}.c_d[{i}]")
                        for i, p in enumerate(raw))
        else:
            c_d = _point(raw, f"{path}.c_d")

    gains = None
    if "harmonic_gains" in data:
        gains = _number_list(data["harmonic_gains"], f"{path}.harmonic_gains")

    intra = data.get("intra")
    if intra is not None and intra != "all_to_all":
        raise ScenarioError(f"{path}.intra",
                            f"expected 'all_to_all', got {intra!r}")

    u_max = None
    if "u_max" in data:
        u_max = _number(data["u_max"], f"{path}.u_max")

    return ControllerSpec(law=law, K=K, omega_d=omega_d, kappa=kappa,
                          c_d=c_d, harmonic_gains=gains, intra=intra,
                          u_max=u_max)


def _serialize_controller(spec: ControllerSpec) -> dict:
    out: dict = {"law": spec.law, "K": spec.K}
    if spec.kappa is not None:
        out["kappa"] = spec.kappa
    out["Omega_d"] = (list(spec.omega_d)
                      if isinstance(spec.omega_d, tuple) else spec.omega_d)
    if spec.c_d is not None:
        if isinstance(spec.c_d[0], tuple):
            out["c_d"] = [list(p) for p in spec.c_d]
        else:
            out["c_d"] = list(spec.c_d)
    if spec.harmonic_gains is not None:
        out["harmonic_gains"] = list(spec.harmonic_gains)
    if spec.intra is not None:
        out["intra"] = spec.intra
    if spec.u_max is not None:
        out["u_max"] = spec.u_max
    return out


_INTEGRATION_KEYS = ("dt", "t_end", "record_every")
_THRESHOLD_KEYS = ("balance_p_theta", "sync_p_theta", "omega_err",
                   "radius_err", "pattern_residual")
_OUTPUT_KEYS = ("directory", "trajectory", "metrics", "report", "figures")


@dataclass(frozen=True)
class OutputSpec:
    directory: str | None = None
    trajectory: bool = True
    metrics: bool = True
    report: bool = True
    figures: bool = True


def _parse_outputs(data, path: str) -> OutputSpec:
    data = _require_mapping(data, path)
    _reject_unknown(data, _OUTPUT_KEYS, path)
    kwargs: dict = {}
    if "directory" in data:
        if not isinstance(data["directory"], str):
            raise ScenarioError(f"{path}.directory", "expected a string")
        kwargs["directory"] = data["directory"]
    for k in ("trajectory", "metrics", "report", "figures"):
        if k in data:
            if not isinstance(data[k], bool):
                raise ScenarioError(f"{path}.{k}", "expected true/false")
            kwargs[k] = data[k]
    return OutputSpec(**kwargs)


def _parse_section(data, path: str, keys, cls, numbers):
    data = _require_mapping(data, path)
    _reject_unknown(data, keys, path)
    kwargs = {}
    for k in keys:
        if k in data:
            kwargs[k] = (_number(data[k], f"{path}.{k}") if k in numbers
                         else _integer(data[k], f"{path}.{k}"))
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from exc


@dataclass(frozen=True)
class Scenario:
    """A fully validated simulation description."""

    name: str
    graph: GraphSpec
    initial: InitialSpec
    controller: ControllerSpec
    integration: IntegrationSettings = field(default_factory=IntegrationSettings)
    thresholds: Thresholds = field(default_factory=Thresholds)
    outputs: OutputSpec = field(default_factory=OutputSpec)

    @property
    def n(self) -> int:
        return self.graph.vertex_count()

    @property
    def orders(self) -> tuple:
        m = self.controller.harmonic_gains
        return tuple(range(1, len(m) + 1)) if m else (1,)

    def build_graph(self) -> InteractionGraph:
        return self.graph.build()

    def build_controller(self, graph: InteractionGraph | None = None
                         ) -> ControllerConfig:
        return self.controller.build(self.graph)

    def build_initial_state(self, seed: int | None = None) -> SwarmState:
        return self.initial.build(self.n, seed=seed)


def parse_scenario_data(data, name_hint: str = "") -> Scenario:
    """Validate a decoded scenario document into a Scenario."""
    data = _require_mapping(data, "scenario")
    _reject_unknown(data, _SCENARIO_KEYS, "")
    if data.get("format") != FORMAT_VERSION:
        raise ScenarioError(
            "format", f"expected format: {FORMAT_VERSION}, "
            f"got {data.get('format')!r}")
    for k in ("graph", "initial", "controller"):
        if k not in data:
            raise ScenarioError(k, "missing required section")

    name = data.get("name", name_hint)
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", f"expected a non-empty string, got {name!r}")

    graph = _parse_graph(data["graph"], "graph")
    initial = _parse_initial(data["initial"], "initial")
    controller = _parse_controller(data["controller"], "controller")

    integration = IntegrationSettings()
    if "integration" in data:
        integration = _parse_section(
            data["integration"], "integration", _INTEGRATION_KEYS,
            IntegrationSettings, numbers=("dt", "t_end"))
    thresholds = Thresholds()
    if "thresholds" in data:
        thresholds = _parse_section(
            data["thresholds"], "thresholds", _THRESHOLD_KEYS,
            Thresholds, numbers=_THRESHOLD_KEYS)
    outputs = OutputSpec()
    if "outputs" in data:
        outputs = _parse_outputs(data["outputs"], "outputs")

    scenario = Scenario(name=name, graph=graph, initial=initial,
                        controller=controller, integration=integration,
                        thresholds=thresholds, outputs=outputs)
    _check_cross_fields(scenario)
    return scenario


def _check_cross_fields(scenario: Scenario) -> None:
    n = scenario.n
    init = scenario.initial
    if not init.is_random and len(init.positions) != n:
        raise ScenarioError(
            "initial.positions",
            f"{len(init.positions)} agents but the graph has {n} vertices")

    # Gain signs, divisibility, and block arity are checked by building
    # the actual controller against the actual graph.
    try:
        graph = scenario.build_graph()
    except ValueError as exc:
        raise ScenarioError("graph", str(exc)) from exc
    config = scenario.build_controller(graph)
    try:
        validate_config(config, graph, warn=False)
    except ValueError as exc:
        raise ScenarioError("controller", str(exc)) from exc


def parse_scenario(path: str | Path) -> Scenario:
    """Load and validate one scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(str(path), f"cannot read scenario: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(str(path), f"not valid YAML: {exc}") from exc
    return parse_scenario_data(data, name_hint=path.stem)


def serialize_scenario(scenario: Scenario) -> dict:
    """Plain-data image of a scenario; parse_scenario_data inverts it."""
    out: dict = {
        "format": FORMAT_VERSION,
        "name": scenario.name,
        "graph": _serialize_graph(scenario.graph),
        "initial": _serialize_initial(scenario.initial),
        "controller": _serialize_controller(scenario.controller),
        "integration": {
            "dt": scenario.integration.dt,
            "t_end": scenario.integration.t_end,
            "record_every": scenario.integration.record_every,
        },
        "thresholds": {
            "balance_p_theta": scenario.thresholds.balance_p_theta,
            "sync_p_theta": scenario.thresholds.sync_p_theta,
            "omega_err": scenario.thresholds.omega_err,
            "radius_err": scenario.thresholds.radius_err,
            "pattern_residual": scenario.thresholds.pattern_residual,
        },
    }
    o = scenario.outputs
    out["outputs"] = {"trajectory": o.trajectory, "metrics": o.metrics,
                      "report": o.report, "figures": o.figures}
    if o.directory is not None:
        out["outputs"]["directory"] = o.directory
    return out


def scenario_to_yaml(scenario: Scenario) -> str:
    return yaml.safe_dump(serialize_scenario(scenario), sort_keys=False)


def bundled_scenario_names() -> list:
    """Names of the scenarios shipped inside the package."""
    root = importlib.resources.files("circform") / "scenarios"
    return sorted(p.name[:-len(".yaml")] for p in root.iterdir()
                  if p.name.endswith(".yaml"))


def load_bundled(name: str) -> Scenario:
    root = importlib.resources.files("circform") / "scenarios"
    res = root / f"{name}.yaml"
    if not res.is_file():
        raise ScenarioError(
            name, f"no bundled scenario by this name; "
            f"available: {', '.join(bundled_scenario_names())}")
    data = yaml.safe_load(res.read_text())
    return parse_scenario_data(data, name_hint=name)


def find_scenario(ref: str) -> Scenario:
    """Resolve a CLI scenario reference: a file path or a bundled name."""
    p = Path(ref)
    if p.suffix in (".yaml", ".yml") or p.exists():
        return parse_scenario(p)
    return load_bundled(ref)
