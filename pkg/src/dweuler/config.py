"""Experiment configuration: flat key=value files, CLI overrides, manifests.

Precedence is CLI > file > defaults.  The manifest written next to run
artifacts is itself a valid config file (informational entries live in
comment lines), so re-running from a manifest reproduces a run bitwise.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

from .errors import UsageError

__all__ = ["ExperimentConfig", "parse_config_items", "parse_config_text",
           "config_hash"]


def _parse_tuple(text):
    return tuple(float(x) for x in text.split(","))


def _format_value(value):
    if isinstance(value, tuple):
        return ",".join(repr(float(x)) for x in value)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; n_x = 2**(5+n) for n in n_lo..n_hi."""

    scheme: str = "lf"
    gamma: float = 1.4
    cfl: float = 0.3
    tend: float = 2.0
    n_lo: int = 1
    n_hi: int = 3
    seed: int = 42
    workers: int = 1
    snapshot_every: int = 0
    alpha_u: float = 1.8
    alpha_rho: float = 0.8
    lf_global_lambda: bool = False
    ic: str = "kh"  # kh | vortex | uniform
    kh_j1: float = 0.25
    kh_j2: float = 0.75
    kh_eps: float = 0.01
    kh_modes: int = 10
    kh_inner: tuple = (2.0, -0.5, 0.0, 2.5)
    kh_outer: tuple = (1.0, 0.5, 0.0, 2.5)
    vortex_strength: float = 8.0
    vortex_sigma: float = 0.06
    vortex_center: tuple = (0.5, 0.5)
    vortex_u_bg: tuple = (1.0, 0.5)
    vortex_rho_bg: float = 1.0
    vortex_p_bg: float = 1.0
    uniform_state: tuple = (1.0, 0.0, 0.0, 1.0)
    out: str = "out"

    def __post_init__(self):
        if self.scheme not in ("lf", "vfv"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.ic not in ("kh", "vortex", "uniform"):
            raise UsageError(f"unknown initial condition {self.ic!r}")
        if not 1 <= self.n_lo <= self.n_hi:
            raise UsageError(f"need 1 <= n_lo <= n_hi, got {self.n_lo}..{self.n_hi}")
        if self.n_hi > 6:
            raise UsageError("n_hi capped at 6 (desk scale)")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")

    def resolutions(self):
        return [(n, 2 ** (5 + n)) for n in range(self.n_lo, self.n_hi + 1)]

    def canonical_text(self) -> str:
        lines = [f"{f.name} = {_format_value(getattr(self, f.name))}"
                 for f in fields(self)]
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_DEFAULTS = ExperimentConfig()


def _convert(name: str, text: str):
    if name not in _FIELD_TYPES:
        raise UsageError(f"unknown config key {name!r}")
    default = getattr(_DEFAULTS, name)
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return _parse_tuple(text)
        return text
    except ValueError as exc:
        raise UsageError(f"bad value for {name!r}: {text!r}") from exc


def parse_config_items(text: str) -> dict:
    """Parse key = value lines; '#' starts a comment, blank lines ignored."""
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        updates[key] = _convert(key, value)
    return updates


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return replace(base or ExperimentConfig(), **parse_config_items(text))


def config_hash(cfg: ExperimentConfig) -> str:
    """Short digest of the canonical key=value text."""
    return hashlib.sha256(cfg.canonical_text().encode()).hexdigest()[:12]
