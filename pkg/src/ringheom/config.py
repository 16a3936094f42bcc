"""Run configuration: INI files with sections, overridable from the CLI."""

from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .bath import BathSpec
from .grid import RingParams
from .risb import effective_beta

__all__ = ["RunConfig", "ConfigError", "load_config", "OUTPUT_ENV"]

OUTPUT_ENV = "RINGHEOM_OUTPUT"

# INI section of every field
_SECTIONS = {
    "model": "run", "regime": "run", "output_dir": "run", "workers": "run",
    "mass": "ring", "radius": "ring", "charge": "ring", "flux": "ring",
    "eta": "bath", "gamma": "bath", "beta": "bath",
    "pade_K": "hierarchy", "N_trunc": "hierarchy", "closure": "hierarchy",
    "solver": "hierarchy",
    "n_theta": "grid", "n_max": "grid",
    "cl_n_p": "cl", "cl_dp": "cl", "cl_order": "cl",
    "tol": "integrator", "steady_tol": "integrator", "relax_horizon": "integrator", "relax_eps": "integrator",
    "t_max": "spectrum", "dt": "spectrum", "damping": "spectrum",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str = "risb"
    regime: str = "markovian"
    mass: float = 0.5
    radius: float = 1.0
    charge: float = -1.0
    flux: list = field(default_factory=lambda: [0.0])
    eta: float = 0.01
    gamma: float = 1.0
    beta: float = 0.2
    pade_K: int = 4
    N_trunc: int = 2
    closure: str = "terminator"
    solver: str = "implicit"
    n_theta: int = 64
    n_max: int = 31
    cl_n_p: int = 128
    cl_dp: float = 0.25
    cl_order: int = 4
    tol: float = 1e-8
    steady_tol: float | None = None
    relax_horizon: float = 500.0
    relax_eps: float = 1e-9
    t_max: float = 200.0
    dt: float = 0.05
    damping: float | None = None
    output_dir: str = ""
    workers: int = 1

    def ring(self, flux_bar: float | None = None) -> RingParams:
        fb = self.flux[0] if flux_bar is None else flux_bar
        return RingParams(self.mass, self.radius, self.charge, float(fb))

    def bath(self) -> BathSpec:
        return BathSpec(self.eta, self.gamma, self.beta)

    def resolved_output(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ENV, "ringheom_out"))

    def validate(self) -> "RunConfig":
        if self.model not in ("risb", "cl"):
            raise ConfigError(f"model must be 'risb' or 'cl', got {self.model!r}")
        if self.regime not in ("markovian", "heom"):
            raise ConfigError(f"regime must be 'markovian' or 'heom', got {self.regime!r}")
        if not self.flux:
            raise ConfigError("flux list is empty")
        try:
            self.bath()
            self.ring()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.regime == "heom":
            if self.pade_K < 0 or self.N_trunc < 0:
                raise ConfigError("heom needs pade_K >= 0 and N_trunc >= 0")
        if self.solver not in ("implicit", "relax"):
            raise ConfigError("solver must be 'implicit' or 'relax'")
        if self.closure not in ("terminator", "zero"):
            raise ConfigError("closure must be 'terminator' or 'zero'")
        if self.steady_tol is not None and not self.steady_tol > 0:
            raise ConfigError("steady_tol must be positive")
        if self.tol <= 0 or self.dt <= 0 or self.t_max <= 0:
            raise ConfigError("tol, dt and t_max must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def check_markovian(self) -> None:
        """Raise :class:`ConfigError` if the Markovian RISB equation is invalid here."""
        if self.model == "risb" and self.regime == "markovian":
            try:
                effective_beta(self.beta, self.ring())
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


def _convert(name: str, raw):
    ftype = {f.name: f.type for f in fields(RunConfig)}[name]
    if raw is None:
        return None
    if name == "flux":
        if isinstance(raw, (list, tuple)):
            return [float(x) for x in raw]
        return [float(x) for x in str(raw).replace(",", " ").split()]
    if name in ("damping", "steady_tol"):
        return None if str(raw).lower() in ("", "none") else float(raw)
    if ftype in ("int", int):
        return int(raw)
    if ftype in ("float", float):
        return float(raw)
    return str(raw)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read an INI file (sections as in the package README) and apply overrides."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise ConfigError(f"cannot read config file {path}")
        known = set(_SECTIONS)
        for section in parser.sections():
            for key, raw in parser.items(section):
                name = {k.lower(): k for k in known}.get(key)
                if name is None:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                if _SECTIONS[name] != section:
                    raise ConfigError(f"key {name!r} belongs to section [{_SECTIONS[name]}]")
                values[name] = _convert(name, raw)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _convert(k, v)
    try:
        cfg = RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()
