"""Run configuration: a flat ``key = value`` file overridable from the command line.

Grammar: one ``key = value`` pair per line; ``#`` starts a comment; blank lines
are ignored; keys are case-sensitive and must be known. Values are parsed by
the key's type. The special value ``inf`` is accepted for the cooperativity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .cavity import CavityParams
from .errors import ConfigError
from .gaussian import GaussianSpec


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_str(text: str):
    return text or None


@dataclass
class RunConfig:
    # input and cavity
    input: str = "sqrt(10),0,0"
    C: float = 250.0
    beta: float = 0.99
    tau: float = 1.0
    dim: int = 64
    # schedule
    target_n: int = 10
    max_rounds: int = 4
    schedule: str | None = None
    p_min: float = 0.05
    stop_threshold: float = 0.93
    n_phases: int = 720
    dephasing: float = 0.0
    # thresholds
    seed: int = 0
    starts: int = 64
    cache: str | None = None
    recompute: bool = False
    # superpose
    superpose_dim: int = 48
    coherence_threshold: float = 0.86
    # bunch
    copies: int = 2
    bunch_dim: int = 24
    # sense
    kind: str = "displacement"
    magnitude_min: float = 1e-3
    magnitude_max: float = 1e-1
    points: int = 21
    # tmsv
    tmsv_beta: float | None = None
    herald_efficiency: float = 1.0
    lambda_min: float = 0.5
    lambda_max: float = 0.99
    # sweep
    n_d_max: float = 16.0
    n_s_max: float = 2.0
    n_d_points: int = 5
    n_s_points: int = 5
    workers: int = 1
    output_dir: str = "out"

    _parsers = {
        bool: _bool,
        int: int,
        float: float,
        str: str,
    }

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def set(self, key: str, text: str) -> None:
        if key not in self.keys():
            raise ConfigError(f"unknown configuration key {key!r}")
        default = getattr(type(self)(), key)
        try:
            if key in ("schedule", "cache"):
                value = _optional_str(text.strip())
            elif key == "tmsv_beta":
                value = None if text.strip() in ("", "none") else float(text)
            elif key == "C":
                value = math.inf if text.strip().lower() == "inf" else float(text)
            else:
                value = self._parsers[type(default)](text.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
        setattr(self, key, value)

    @property
    def gaussian(self) -> GaussianSpec:
        try:
            return GaussianSpec.parse(self.input)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def cavity(self) -> CavityParams:
        try:
            return CavityParams(self.C, self.beta, 0.0, self.tau)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> None:
        self.gaussian, self.cavity  # noqa: B018 (parse for errors)
        if self.target_n < 0 or self.target_n >= self.dim - 5:
            raise ConfigError(f"target_n={self.target_n} does not fit dim={self.dim}")
        if self.max_rounds < 0:
            raise ConfigError("max_rounds must be >= 0")
        if self.kind not in ("displacement", "squeezing"):
            raise ConfigError(f"kind must be displacement or squeezing, got {self.kind!r}")
        if self.copies < 2:
            raise ConfigError("copies must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.keys()}


def parse_config_text(text: str, cfg: RunConfig | None = None) -> RunConfig:
    cfg = RunConfig() if cfg is None else cfg
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg.set(key, value)
    return cfg


def load_config(path: str | Path | None, overrides: list[str] = ()) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        parse_config_text(text, cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value)
    cfg.validate()
    return cfg
