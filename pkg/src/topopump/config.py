"""Run configuration: a flat key=value schema with file and CLI override.

Values are plain scalars or grids.  A grid is either a comma list
("2,4,6") or an inclusive range "start:stop:step".  Energies are in units
of the drive amplitude (pinned to 1) and times in its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["OPTIONS", "RunConfig", "parse_grid"]


@dataclass(frozen=True)
class Option:
    kind: str  # int | float | bool | str | grid
    default: object
    help: str
    choices: tuple[str, ...] | None = None


OPTIONS: dict[str, Option] = {
    "topology.kind": Option("str", "interface", "lattice topology", ("even", "odd", "interface", "router")),
    "topology.cells": Option("int", 10, "cells (chains) or sites per branch (router)"),
    "topology.branches": Option("int", 4, "number of router branches"),
    "protocol.kind": Option("str", "exponential", "drive protocol", ("cosine", "exponential", "three_step")),
    "protocol.alpha": Option("float", 3.2, "exponential sharpness"),
    "protocol.t_star": Option("float", 100.0, "total evolution time"),
    "protocol.t_op": Option("float", 10.0, "three-step ramp interval"),
    "protocol.j1_0": Option("float", 1.0, "three-step initial intracell coupling"),
    "protocol.j2_0": Option("float", 0.0, "three-step initial intercell coupling"),
    "protocol.vb_symmetric": Option("bool", False, "mirror the exponential onsite ramp about t*/2"),
    "numerics.dt": Option("float", 0.0, "integrator step; 0 selects min(0.005, t*/20000)"),
    "numerics.n_k": Option("int", 4096, "Brillouin-zone grid for the winding number"),
    "numerics.frames": Option("int", 500, "max recorded frames per evolution"),
    "run.seed": Option("int", 0, "master seed for all sampling"),
    "run.jobs": Option("int", 0, "worker threads; 0 defers to TOPOPUMP_JOBS or 1"),
    "run.out": Option("str", "runs/out", "output directory"),
    "run.label": Option("str", "", "output file prefix; defaults to the subcommand"),
    "spectrum.dispersion_j1": Option("grid", [1.0, 1.0, 0.6], "J1 list for dispersion tables"),
    "spectrum.dispersion_j2": Option("grid", [0.6, 1.0, 1.0], "J2 list for dispersion tables"),
    "spectrum.k_points": Option("int", 257, "momentum samples per dispersion curve"),
    "spectrum.sweep_j1": Option("grid", "0:2:0.02", "J1 grid for the open-chain spectrum sweep"),
    "spectrum.sweep_j2": Option("float", 1.0, "fixed J2 for the spectrum sweep"),
    "spectrum.profile_j1": Option("float", 0.6, "J1 for the localized-state density profile"),
    "spectrum.time_samples": Option("int", 201, "times sampled for instantaneous spectra"),
    "spectrum.alpha_values": Option("grid", [2.0, 4.0, 6.0, 8.0, 10.0], "alphas for the min-gap table"),
    "winding.j1": Option("grid", [1.0, 0.6], "J1 list for winding numbers"),
    "winding.j2": Option("grid", [0.6, 1.0], "J2 list for winding numbers"),
    "sweep.kind": Option("str", "fidelity", "sweep flavor",
                         ("fidelity", "alpha_phase", "size_phase", "size_times", "branch_times", "size_loss")),
    "sweep.t_grid": Option("grid", "60:160:5", "total-time grid"),
    "sweep.alpha_grid": Option("grid", "2:6:0.5", "alpha grid"),
    "sweep.sizes": Option("grid", [13, 17, 21, 25, 29, 33], "chain lengths L"),
    "sweep.branches": Option("grid", [2, 3, 4, 5, 6], "router branch counts"),
    "sweep.branch_sites": Option("int", 10, "sites per router branch"),
    "sweep.threshold": Option("float", 0.99, "stabilization fidelity threshold"),
    "sweep.gamma": Option("float", 2.5e-5, "uniform loss rate for the size_loss sweep"),
    "sweep.alpha_from_fit": Option("bool", True, "pick alpha per size from the empirical cubic"),
    "ensemble.kind": Option("str", "disorder", "ensemble flavor", ("disorder", "disorder_time", "loss")),
    "ensemble.disorder": Option("str", "diagonal", "disorder channel", ("diagonal", "off_diagonal")),
    "ensemble.symmetry": Option("str", "mirror", "disorder symmetry", ("mirror", "asymmetric")),
    "ensemble.granularity": Option("str", "global", "offset granularity", ("per_element", "global")),
    "ensemble.strengths": Option("grid", "0:0.7:0.1", "disorder strength grid"),
    "ensemble.strength": Option("float", 0.4, "disorder strength for disorder_time"),
    "ensemble.samples": Option("int", 100, "realizations per ensemble point"),
    "ensemble.gammas": Option("grid", "0:5e-5:5e-6", "loss-rate grid"),
    "ensemble.asymmetric_loss": Option("bool", False, "draw asymmetric b-site losses"),
    "ensemble.loss_samples": Option("int", 20, "realizations per loss point in asymmetric mode"),
    "fit.input": Option("str", "", "input table for the cubic fit"),
    "fit.x_column": Option("str", "size", "abscissa column name"),
    "fit.y_column": Option("str", "t_stab", "ordinate column name"),
    "router.task": Option("str", "evolve", "router subcommand flavor", ("evolve", "fidelity")),
}


def parse_grid(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = text.strip()
    if not text:
        raise ConfigError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range grid must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range grid {text!r}")
        n = int(np.floor((stop - start) / step + 1e-9))
        return [start + i * step for i in range(n + 1)]
    return [float(p) for p in text.split(",")]


def _parse_value(key: str, raw, opt: Option):
    if opt.kind == "grid":
        return parse_grid(raw)
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if opt.kind == "int":
            return int(raw)
        if opt.kind == "float":
            return float(raw)
        if opt.kind == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        value = raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {opt.kind}") from exc
    if opt.choices and value not in opt.choices:
        raise ConfigError(f"{key}: {value!r} not one of {opt.choices}")
    return value


class RunConfig:
    """Resolved configuration: every schema key has a value."""

    def __init__(self, overrides: dict | None = None):
        self._values = {key: _parse_value(key, opt.default, opt) for key, opt in OPTIONS.items()}
        for key, raw in (overrides or {}).items():
            self.set(key, raw)

    def set(self, key: str, raw) -> None:
        if key not in OPTIONS:
            raise ConfigError(f"unknown configuration key {key!r}")
        self._values[key] = _parse_value(key, raw, OPTIONS[key])

    def __getitem__(self, key: str):
        return self._values[key]

    def to_text(self) -> str:
        lines = []
        for key in sorted(self._values):
            value = self._values[key]
            if isinstance(value, list):
                value = ",".join(format(v, ".17g") for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = format(value, ".17g")
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def physics_text(self) -> str:
        """Config text without the keys that cannot change any result value.

        Output location, file prefix, and worker count are excluded, so the
        provenance hash identifies the computation itself.
        """
        skip = ("run.out", "run.label", "run.jobs")
        lines = [line for line in self.to_text().splitlines() if not line.startswith(skip)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "RunConfig":
        cfg = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, _, raw = body.partition("=")
                try:
                    cfg.set(key.strip(), raw.strip())
                except ConfigError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
        for key, raw in (overrides or {}).items():
            cfg.set(key, raw)
        return cfg
