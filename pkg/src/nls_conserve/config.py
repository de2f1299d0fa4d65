"""Experiment configuration: INI-style ``key = value`` files plus ``--set`` overrides.

Example::

    [problem]
    n = 1
    p = 3
    lambda = 1

    [grid]
    N = 512
    L = 60

Every experiment starts from a desk-scale preset (see :data:`PRESETS`);
the file and the overrides only need to name what differs.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .initial import InitialSpec, lattice_boost
from .integrator import NlsParams, StepSchedule
from .spectral import Grid

EXPERIMENTS = ("momentum", "pc-balance", "e1-balance", "lens-equivalence", "decay",
               "convergence", "exponents")


class ConfigError(ValueError):
    pass


BASE: dict[str, dict[str, str]] = {
    "problem": {"n": "1", "p": "3", "lambda": "1", "beta": "0"},
    "grid": {"N": "512", "L": "60"},
    "schedule": {"t_start": "0", "t_end": "5", "dt": "1e-3", "samples_every": "1",
                 "blowup_ceiling": "1e6"},
    "initial": {"kind": "gaussian", "width": "1", "amplitude": "1", "center": "0",
                "boost": "0", "chirp": "0", "a": "1"},
    "lens": {"t_tilde": "0.5", "t_final": "2"},
    "decay": {"r": "6", "window": "5, 20"},
    "convergence": {"base": "pc-balance", "dts": "2e-3, 1e-3, 5e-4"},
    "exponents": {"n": "3", "p": "3", "s": "1/2", "wide_s_range": "false"},
    "tolerances": {},
    "output": {"snapshots": "false"},
}

PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "momentum": {
        "schedule": {"t_end": "5", "samples_every": "10"},
        "initial": {"boost_mode": "3"},
        "tolerances": {"momentum_drift": "1e-9", "mass_drift": "1e-11"},
    },
    "pc-balance": {
        "schedule": {"t_end": "2"},
        # pc_residual defaults to 5e-6 when n(p-1) = 4 and 1e-4 otherwise
        "tolerances": {},
    },
    "e1-balance": {
        "problem": {"beta": "auto"},
        "schedule": {"t_start": "1", "t_end": "2"},
        "tolerances": {"e1_residual": "1e-4"},
    },
    "lens-equivalence": {
        "grid": {"N": "1024"},
        "schedule": {"dt": "5e-4", "samples_every": "100"},
        "tolerances": {"equivalence_mismatch": "1e-4"},
        "output": {"snapshots": "true"},
    },
    "decay": {
        "problem": {"p": "5"},
        "grid": {"N": "8192", "L": "800"},
        "schedule": {"t_end": "20", "samples_every": "100"},
        "initial": {"chirp": "0.5"},
        "tolerances": {"decay_slope_rel": "0.15", "decay_bound_excess": "1e-12"},
    },
    "convergence": {
        "schedule": {"t_end": "2"},
        "tolerances": {"order_min": "1.7", "order_max": "2.3"},
    },
    "exponents": {},
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    experiment: str
    sections: dict[str, dict[str, str]]

    def get(self, section: str, key: str, default: str | None = None) -> str:
        try:
            return self.sections[section][key]
        except KeyError:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}") from None
            return default

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def getfloat(self, section: str, key: str) -> float:
        text = self.get(section, key)
        try:
            return float(Fraction(text.strip())) if "/" in text else float(text)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key} = {text!r} is not a number") from exc

    def getint(self, section: str, key: str) -> int:
        value = self.getfloat(section, key)
        if value != int(value):
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(value)

    # typed views ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.getint("problem", "n")

    def params(self, transformed: bool | None = None) -> NlsParams:
        n, p, lam = self.dim, self.getfloat("problem", "p"), self.getfloat("problem", "lambda")
        beta_text = self.get("problem", "beta", "0").strip().lower()
        if transformed is None:
            transformed = beta_text == "auto"
        if transformed:
            return NlsParams.transformed(n, p, lam)
        if beta_text == "auto":
            return NlsParams(n, p, lam)
        return NlsParams(n, p, lam, self.getfloat("problem", "beta"))

    def grid(self) -> Grid:
        dim = self.dim
        pts = tuple(int(v) for v in _floats(self.get("grid", "N")))
        lengths = _floats(self.get("grid", "L"))
        pts = pts * dim if len(pts) == 1 else pts
        lengths = lengths * dim if len(lengths) == 1 else lengths
        return Grid(pts, lengths)

    def schedule(self, dt: float | None = None) -> StepSchedule:
        return StepSchedule(self.getfloat("schedule", "t_start"), self.getfloat("schedule", "t_end"),
                            self.getfloat("schedule", "dt") if dt is None else dt,
                            self.getint("schedule", "samples_every"))

    def initial_spec(self, grid: Grid | None = None) -> InitialSpec:
        grid = grid or self.grid()
        sec = self.sections["initial"]
        if "boost_mode" in sec:
            boost = lattice_boost(grid, _floats(sec["boost_mode"]))
        else:
            boost = _floats(sec.get("boost", "0"))
        return InitialSpec(kind=sec.get("kind", "gaussian").strip(), width=self.getfloat("initial", "width"),
                           amplitude=self.getfloat("initial", "amplitude"),
                           center=_floats(sec.get("center", "0")), boost=boost,
                           chirp=self.getfloat("initial", "chirp"), a=self.getfloat("initial", "a"))

    def floats(self, section: str, key: str) -> tuple[float, ...]:
        return _floats(self.get(section, key))

    def flag(self, section: str, key: str) -> bool:
        return _bool(self.get(section, key, "false"))

    def tolerances(self) -> dict[str, float]:
        return {k: float(v) for k, v in self.sections.get("tolerances", {}).items()}

    def with_overrides(self, overrides: Iterable[str]) -> "ExperimentConfig":
        sections = {k: dict(v) for k, v in self.sections.items()}
        _apply_overrides(sections, overrides)
        return ExperimentConfig(self.experiment, sections)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "sections": self.sections}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        return cls(data["experiment"], {k: dict(v) for k, v in data["sections"].items()})

    def run_id(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha1(blob).hexdigest()[:12]

    def validate(self) -> None:
        if self.experiment == "exponents":
            return
        params = self.params()
        grid = self.grid()
        if grid.dim != params.n:
            raise ConfigError(f"grid has {grid.dim} axes but n = {params.n}")
        self.initial_spec(grid)
        if self.experiment == "decay":
            if not (params.lam > 0 and params.p >= 1 + 4 / params.n - 1e-12):
                raise ConfigError("decay experiment requires lambda > 0 and p >= 1 + 4/n")
        if self.experiment == "convergence":
            base = self.get("convergence", "base").strip()
            if base not in ("momentum", "pc-balance", "e1-balance", "lens-equivalence"):
                raise ConfigError(f"cannot run a convergence study of {base!r}")
            if len(self.floats("convergence", "dts")) < 3:
                raise ConfigError("a convergence study needs at least three dt values")


def _apply_overrides(sections: dict[str, dict[str, str]], overrides: Iterable[str]) -> None:
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        sections.setdefault(section, {})[name] = value.strip()


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str  # keep 'N' and 'L' as written
    return cp


def load_config(experiment: str, path: str | Path | None = None,
                overrides: Iterable[str] = ()) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    cp = _parser()
    cp.read_dict(BASE)
    cp.read_dict(PRESETS[experiment])
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    sections = {s: dict(cp.items(s)) for s in cp.sections()}
    _apply_overrides(sections, overrides)
    cfg = ExperimentConfig(experiment, sections)
    cfg.validate()
    return cfg


def default_pc_tolerance(params: NlsParams) -> float:
    critical = math.isclose(params.n * (params.p - 1), 4.0, rel_tol=0, abs_tol=1e-12)
    return 5e-6 if critical else 1e-4
