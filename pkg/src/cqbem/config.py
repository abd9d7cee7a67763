"""TOML run configuration.

Sections and keys are checked strictly: a misspelled key is an error,
not a silent default. Exactly one of horizon or kappa fixes the time
grid together with n_steps. The scatterer is either a mesh file or a
built-in shape.

Example:

    [problem]
    shape = "icosphere"
    refinement = 2
    radius = 0.5
    method = "bdf2"
    horizon = 4.0
    n_steps = 128

    [source]
    position = [0.1, 0.06, 0.04]
    tau = 0.15

    [observation]
    points = [[2.0, 0.3, 0.1]]
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from .cq import parse_method
from .errors import ConfigError
from .mesh import SurfaceMesh, load_mesh, validate_mesh
from .shapes import cube, icosphere
from .spaces import CausalSignal, IncidentWave

_BACKENDS = ("auto", "compiled", "reference")


@dataclass(frozen=True)
class RunConfig:
    # scatterer: exactly one of mesh_path / shape
    mesh_path: str | None
    shape: str | None
    refinement: int
    radius: float
    size: float
    # time discretization
    method: str
    n_steps: int
    kappa: float | None
    horizon: float | None
    # incident pulse
    source: tuple[float, float, float]
    signal_m: int
    signal_tau: float | None
    signal_amplitude: float
    # observation
    observation_points: tuple[tuple[float, float, float], ...]
    clearance: float | None
    # numerics
    quad_order: int
    near_factor: float
    backend: str
    solver: str
    n_nodes: int | None
    contour_radius: float | None

    @property
    def resolved_kappa(self) -> float:
        return self.kappa if self.kappa is not None else self.horizon / self.n_steps

    @property
    def resolved_horizon(self) -> float:
        return self.horizon if self.horizon is not None else self.kappa * self.n_steps

    @property
    def resolved_tau(self) -> float:
        return self.signal_tau if self.signal_tau is not None else 0.0625 * self.resolved_horizon

    def build_mesh(self) -> SurfaceMesh:
        if self.mesh_path is not None:
            return load_mesh(self.mesh_path)
        if self.shape == "icosphere":
            mesh = icosphere(self.refinement, self.radius)
        else:
            mesh = cube(size=self.size)
        validate_mesh(mesh)
        return mesh

    def build_wave(self) -> IncidentWave:
        signal = CausalSignal(m=self.signal_m, tau=self.resolved_tau,
                              amplitude=self.signal_amplitude)
        return IncidentWave(self.source, signal)


def _take(table: dict, section: str, known: dict):
    """Pop known keys with defaults; reject anything left over."""
    body = dict(table.pop(section, {}))
    out = {}
    for key, default in known.items():
        out[key] = body.pop(key, default)
    if body:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(body))}")
    return out


def parse_config(data: dict) -> RunConfig:
    data = dict(data)
    problem = _take(data, "problem", {
        "mesh": None, "shape": None, "refinement": 2, "radius": 0.5, "size": 1.0,
        "method": None, "n_steps": None, "kappa": None, "horizon": None,
    })
    source = _take(data, "source", {
        "position": None, "m": 9, "tau": None, "amplitude": 1.0,
    })
    observation = _take(data, "observation", {"points": [], "clearance": None})
    numerics = _take(data, "numerics", {
        "quad_order": 6, "near_factor": 2.0, "backend": "auto",
        "solver": "spectral", "n_nodes": None, "contour_radius": None,
    })
    if data:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(data))}")

    if (problem["mesh"] is None) == (problem["shape"] is None):
        raise ConfigError("[problem] needs exactly one of 'mesh' or 'shape'")
    if problem["shape"] is not None and problem["shape"] not in ("icosphere", "cube"):
        raise ConfigError(f"unknown shape {problem['shape']!r} (icosphere or cube)")
    if problem["method"] is None:
        raise ConfigError("[problem] is missing 'method'")
    method = parse_method(str(problem["method"]))
    if problem["n_steps"] is None:
        raise ConfigError("[problem] is missing 'n_steps'")
    n_steps = int(problem["n_steps"])
    if n_steps < 1:
        raise ConfigError("n_steps must be at least 1")
    if (problem["kappa"] is None) == (problem["horizon"] is None):
        raise ConfigError("[problem] needs exactly one of 'kappa' or 'horizon'")
    for key in ("kappa", "horizon"):
        if problem[key] is not None and float(problem[key]) <= 0:
            raise ConfigError(f"{key} must be positive")

    if source["position"] is None:
        raise ConfigError("[source] is missing 'position'")
    position = tuple(float(c) for c in source["position"])
    if len(position) != 3:
        raise ConfigError("source position must have three components")
    if source["tau"] is not None and float(source["tau"]) <= 0:
        raise ConfigError("source tau must be positive")

    points = tuple(tuple(float(c) for c in p) for p in observation["points"])
    if any(len(p) != 3 for p in points):
        raise ConfigError("observation points must have three components each")

    if numerics["backend"] not in _BACKENDS:
        raise ConfigError(f"backend must be one of {_BACKENDS}")
    if numerics["solver"] not in ("spectral", "march"):
        raise ConfigError("solver must be 'spectral' or 'march'")
    if int(numerics["quad_order"]) < 2:
        raise ConfigError("quad_order must be at least 2")

    return RunConfig(
        mesh_path=problem["mesh"], shape=problem["shape"],
        refinement=int(problem["refinement"]), radius=float(problem["radius"]),
        size=float(problem["size"]),
        method=method, n_steps=n_steps,
        kappa=None if problem["kappa"] is None else float(problem["kappa"]),
        horizon=None if problem["horizon"] is None else float(problem["horizon"]),
        source=position, signal_m=int(source["m"]),
        signal_tau=None if source["tau"] is None else float(source["tau"]),
        signal_amplitude=float(source["amplitude"]),
        observation_points=points,
        clearance=None if observation["clearance"] is None else float(observation["clearance"]),
        quad_order=int(numerics["quad_order"]), near_factor=float(numerics["near_factor"]),
        backend=str(numerics["backend"]), solver=str(numerics["solver"]),
        n_nodes=None if numerics["n_nodes"] is None else int(numerics["n_nodes"]),
        contour_radius=None if numerics["contour_radius"] is None
        else float(numerics["contour_radius"]),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return parse_config(data)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def dumps_config(cfg: RunConfig) -> str:
    """Serialize back to TOML (omits keys left at None)."""
    sections: dict[str, dict] = {
        "problem": {
            "mesh": cfg.mesh_path, "shape": cfg.shape,
            "refinement": cfg.refinement if cfg.shape == "icosphere" else None,
            "radius": cfg.radius if cfg.shape == "icosphere" else None,
            "size": cfg.size if cfg.shape == "cube" else None,
            "method": cfg.method, "n_steps": cfg.n_steps,
            "kappa": cfg.kappa, "horizon": cfg.horizon,
        },
        "source": {
            "position": list(cfg.source), "m": cfg.signal_m,
            "tau": cfg.signal_tau, "amplitude": cfg.signal_amplitude,
        },
        "observation": {
            "points": [list(p) for p in cfg.observation_points] or None,
            "clearance": cfg.clearance,
        },
        "numerics": {
            "quad_order": cfg.quad_order, "near_factor": cfg.near_factor,
            "backend": cfg.backend, "solver": cfg.solver,
            "n_nodes": cfg.n_nodes, "contour_radius": cfg.contour_radius,
        },
    }
    lines = []
    for name, body in sections.items():
        body = {k: v for k, v in body.items() if v is not None}
        if not body:
            continue
        lines.append(f"[{name}]")
        for key, value in body.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))
