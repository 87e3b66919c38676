"""Run configuration (JSON) and result serialization (JSON + CSV).

All floating-point values in CSV files are printed with 17 significant
digits and JSON uses Python's shortest-round-trip repr, so every output
parses back to the exact binary value.  File names and row order are
fully deterministic: identical configs produce bitwise-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .conserved import DriftReport
from .dynamics import SimConfig
from .errors import InvalidParameterError
from .soliton import SolitonParams
from .state import FieldState, bond_field
from .topology import GraphTopology, topology_from_dict, topology_to_dict

EXPERIMENTS = ("simulate", "bifurcation", "sweep", "broken-rule", "conserved-audit")
DEFAULT_RATIO_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

_CONFIG_KEYS = {
    "experiment",
    "topology",
    "soliton",
    "sim",
    "out",
    "m_max",
    "ratios",
    "snapshot_times",
}
_SOLITON_KEYS = {"alpha", "beta", "n0", "phi0"}
_SIM_KEYS = {"dt", "t_final", "output_stride"}


@dataclass(frozen=True)
class RunConfig:
    """One experiment invocation: what to run, on what, and where to write."""

    experiment: str
    topology: GraphTopology
    soliton: SolitonParams
    sim: SimConfig = SimConfig()
    out: str = "results"
    m_max: int = 4
    ratios: tuple[float, ...] = ()
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidParameterError(
                f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}"
            )
        if isinstance(self.m_max, bool) or not isinstance(self.m_max, int) or self.m_max < 1:
            raise InvalidParameterError("m_max must be an integer >= 1")
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(
            self, "snapshot_times", tuple(float(t) for t in self.snapshot_times)
        )
        for t in self.snapshot_times:
            if not math.isfinite(t) or t < 0:
                raise InvalidParameterError("snapshot times must be finite and >= 0")


def parse_config(data: Mapping) -> RunConfig:
    """Build a RunConfig from a decoded JSON object; unknown keys are errors."""
    if not isinstance(data, Mapping):
        raise InvalidParameterError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown config keys: {sorted(unknown)}")
    for key in ("experiment", "topology", "soliton"):
        if key not in data:
            raise InvalidParameterError(f"config is missing required key {key!r}")
    sol = data["soliton"]
    if not isinstance(sol, Mapping):
        raise InvalidParameterError("'soliton' must be an object")
    unknown = set(sol) - _SOLITON_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown soliton keys: {sorted(unknown)}")
    for key in ("alpha", "beta", "n0"):
        if key not in sol:
            raise InvalidParameterError(f"soliton spec is missing {key!r}")
    sim = data.get("sim", {})
    if not isinstance(sim, Mapping):
        raise InvalidParameterError("'sim' must be an object")
    unknown = set(sim) - _SIM_KEYS
    if unknown:
        raise InvalidParameterError(f"unknown sim keys: {sorted(unknown)}")
    stride = sim.get("output_stride", 100)
    if isinstance(stride, bool) or not isinstance(stride, int):
        raise InvalidParameterError("output_stride must be an integer")
    return RunConfig(
        experiment=data["experiment"],
        topology=topology_from_dict(data["topology"]),
        soliton=SolitonParams(
            alpha=sol["alpha"],
            beta=sol["beta"],
            n0=sol["n0"],
            phi0=sol.get("phi0", 0.0),
        ),
        sim=SimConfig(
            dt=sim.get("dt", 0.01),
            t_final=sim.get("t_final"),
            output_stride=stride,
        ),
        out=str(data.get("out", "results")),
        m_max=data.get("m_max", 4),
        ratios=data.get("ratios", ()),
        snapshot_times=data.get("snapshot_times", ()),
    )


def serialize_config(config: RunConfig) -> dict:
    """Inverse of parse_config: parse_config(serialize_config(c)) == c."""
    return {
        "experiment": config.experiment,
        "topology": topology_to_dict(config.topology),
        "soliton": {
            "alpha": config.soliton.alpha,
            "beta": config.soliton.beta,
            "n0": config.soliton.n0,
            "phi0": config.soliton.phi0,
        },
        "sim": {
            "dt": config.sim.dt,
            "t_final": config.sim.t_final,
            "output_stride": config.sim.output_stride,
        },
        "out": config.out,
        "m_max": config.m_max,
        "ratios": list(config.ratios),
        "snapshot_times": list(config.snapshot_times),
    }


def load_config(path: str | Path) -> RunConfig:
    """Read and parse a JSON config file; all failures become config errors."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config {p}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"config {p} is not valid JSON: {exc}") from None
    return parse_config(data)


# -- result emission --------------------------------------------------------


@dataclass
class RunOutputs:
    """Everything one experiment wants on disk.

    ``partial_norms`` is (times, {bond label: series}); ``snapshots`` is a
    sequence of (time, state) pairs and needs ``topology`` for the flat
    layout.  Only ``summary`` is mandatory.
    """

    summary: dict
    config_echo: dict | None = None
    partial_norms: tuple[np.ndarray, dict[str, np.ndarray]] | None = None
    drift: DriftReport | None = None
    snapshots: tuple[tuple[float, FieldState], ...] = ()
    topology: GraphTopology | None = None


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_outputs(outputs: RunOutputs, directory: str | Path) -> list[str]:
    """Write every populated section; returns the manifest of files written.

    Manifest entries are paths relative to ``directory``, in write order.
    """
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
        manifest: list[str] = []

        def emit(name: str, text: str):
            target = root / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
            manifest.append(name)

        emit("summary.json", _json_text(outputs.summary))
        if outputs.config_echo is not None:
            emit("config_echo.json", _json_text(outputs.config_echo))
        if outputs.partial_norms is not None:
            times, series = outputs.partial_norms
            labels = sorted(series)
            lines = ["time," + ",".join(f"bond_{l}" for l in labels) + ",total"]
            for i, t in enumerate(times):
                row = [series[l][i] for l in labels]
                lines.append(",".join(_fmt(x) for x in [t, *row, sum(row)]))
            emit("partial_norms.csv", "\n".join(lines) + "\n")
        if outputs.drift is not None:
            snaps = outputs.drift.snapshots
            n_c = len(snaps[0].C) if snaps else 0
            header = ["time", "N", "ReZ", "ImZ", "E", "J"]
            for m in range(2, 2 + n_c):
                header += [f"ReC{m}", f"ImC{m}"]
            lines = [",".join(header)]
            for s in snaps:
                row = [s.time, s.N, s.Z.real, s.Z.imag, s.E, s.J]
                for c in s.C:
                    row += [c.real, c.imag]
                lines.append(",".join(_fmt(x) for x in row))
            emit("drift.csv", "\n".join(lines) + "\n")
        if outputs.snapshots:
            if outputs.topology is None:
                raise InvalidParameterError("snapshots need the topology for their layout")
            for t, state in outputs.snapshots:
                lines = ["bond,site,re,im"]
                for label in outputs.topology.labels:
                    a = bond_field(state, outputs.topology, label)
                    for site, value in zip(outputs.topology.site_coordinates(label), a):
                        lines.append(
                            f"{label},{site},{_fmt(value.real)},{_fmt(value.imag)}"
                        )
                emit(f"snapshots/t_{t:.4f}.csv", "\n".join(lines) + "\n")
        return manifest
    except OSError as exc:
        raise InvalidParameterError(f"cannot write outputs under {root}: {exc}") from None
