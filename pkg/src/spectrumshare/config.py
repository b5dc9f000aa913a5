"""Experiment configuration: the flat key = value file format and its model.

A config file is plain text, one ``key = value`` pair per line, with ``#``
starting a comment.  Keys mirror the :class:`ExperimentConfig` field names
exactly; unknown keys are errors so typos fail fast.  List-valued keys
(``policies``, ``sweep_values``, ``q_values``) take comma-separated items.

Example::

    world = independent
    n = 32
    l = 4
    horizon = 30000
    runs = 100
    base_seed = 42
    gamma = 0.5
    q_min = 0.1
    q_max = 0.5
    policies = pure_random, check_empty_random, whittle, heuristic
    sweep_variable = L
    sweep_values = 1, 2, 3, 4, 6, 8
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace

import numpy as np

from .scheduling import PolicySpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config"]

log = logging.getLogger(__name__)

WORLD_KINDS = ("independent", "band")
SWEEP_VARIABLES = ("L", "q_max", "N", "sigma")

# Channels configured at or above 0.5 are clamped to just below it, keeping
# the persistent-chain assumption while allowing "evenly spaced up to 0.5"
# sweeps.
Q_CLAMP = 0.5 - 1e-6


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: world, policies, horizon, sweeps."""

    world: str = "independent"
    n: int = 32
    l: int = 4
    horizon: int = 30000
    runs: int = 100
    base_seed: int = 42
    gamma: float = 0.5
    policies: tuple[PolicySpec, ...] = (
        PolicySpec("pure_random"),
        PolicySpec("check_empty_random"),
        PolicySpec("whittle"),
        PolicySpec("heuristic"),
    )
    q_min: float = 0.1
    q_max: float = 0.5
    q_values: tuple[float, ...] | None = None
    nonstationary: bool = False
    q_drift: float = 0.15
    prior_q: float = 0.3
    window_length: int = 1000
    forgetting: float = 0.5
    band_width: int = 12
    sigma: float = 1.0
    band_memory: float = 0.5
    age_over_selected: bool = False
    sweep_variable: str | None = None
    sweep_values: tuple[float, ...] | None = None
    l_fraction: float | None = None

    def channel_qs(self) -> np.ndarray:
        """Per-channel flip probabilities: explicit list or even spacing.

        Values at or above 0.5 are clamped to 0.5 - 1e-6 with a logged
        warning; values at or below 0 are rejected.
        """
        if self.q_values is not None:
            qs = np.asarray(self.q_values, dtype=np.float64)
        elif self.n == 1:
            qs = np.array([self.q_min])
        else:
            qs = self.q_min + np.arange(self.n) * (self.q_max - self.q_min) / (
                self.n - 1
            )
        if np.any(qs <= 0.0):
            raise ConfigError("flip probabilities must be positive")
        if np.any(qs >= 0.5):
            log.warning(
                "clamping %d flip probabilities >= 0.5 down to %s",
                int(np.sum(qs >= 0.5)),
                Q_CLAMP,
            )
            qs = np.minimum(qs, Q_CLAMP)
        return qs

    def validate(self) -> None:
        if self.world not in WORLD_KINDS:
            raise ConfigError(f"unknown world kind {self.world!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if not 1 <= self.l <= self.n:
            raise ConfigError(f"need 1 <= l <= n, got l={self.l}, n={self.n}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.gamma < 0.0:
            raise ConfigError("gamma must be >= 0")
        if not self.policies:
            raise ConfigError("need at least one policy")
        if not 0.0 < self.prior_q < 0.5:
            raise ConfigError("prior_q must lie in (0, 0.5)")
        if not 0.0 < self.forgetting <= 1.0:
            raise ConfigError("forgetting must lie in (0, 1]")
        if self.window_length < 1:
            raise ConfigError("window_length must be >= 1")
        if self.q_values is not None and len(self.q_values) != self.n:
            raise ConfigError("q_values must list one value per channel")
        if not 0.0 < self.q_min <= self.q_max:
            raise ConfigError("need 0 < q_min <= q_max")
        for policy in self.policies:
            if self.world == "band" and policy.kind not in (
                "pure_random",
                "check_empty_random",
                "correlated_heuristic",
            ):
                raise ConfigError(
                    f"policy {policy.label!r} needs per-channel flip "
                    "probabilities; not valid in a band world"
                )
            if self.world == "independent" and policy.kind == "correlated_heuristic":
                raise ConfigError("correlated_heuristic requires the band world")
        if self.world == "band":
            if not 1 <= self.band_width <= self.n:
                raise ConfigError("need 1 <= band_width <= n")
            if self.sigma <= 0.0:
                raise ConfigError("sigma must be positive")
            if not 0.0 <= self.band_memory <= 1.0:
                raise ConfigError("band_memory must lie in [0, 1]")
        self._validate_sweep()
        if self.world == "independent":
            self.channel_qs()  # surfaces bad q ranges early

    def _validate_sweep(self) -> None:
        if self.sweep_variable is None:
            if self.sweep_values is not None:
                raise ConfigError("sweep_values given without sweep_variable")
            if self.l_fraction is not None:
                raise ConfigError("l_fraction is only meaningful for N sweeps")
            return
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep_variable must be one of {SWEEP_VARIABLES}, "
                f"got {self.sweep_variable!r}"
            )
        if not self.sweep_values:
            raise ConfigError("sweep needs at least one value")
        if self.l_fraction is not None and self.sweep_variable != "N":
            raise ConfigError("l_fraction is only meaningful for N sweeps")
        if self.sweep_variable == "N" and self.q_values is not None:
            raise ConfigError("N sweeps require q_min/q_max, not an explicit q list")
        for value in self.sweep_values:
            if self.sweep_variable in ("L", "N") and value != int(value):
                raise ConfigError(f"{self.sweep_variable} sweep values must be integers")
            if self.sweep_variable == "L" and not 1 <= value <= self.n:
                raise ConfigError(f"swept L={value} outside [1, n={self.n}]")
            if self.sweep_variable == "N":
                n = int(value)
                limit = self._limit_for_n(n)
                if not 1 <= limit <= n:
                    raise ConfigError(f"swept N={n} leaves no valid L")
                if self.world == "band" and self.band_width > n:
                    raise ConfigError(f"swept N={n} smaller than the band width")
            if self.sweep_variable == "sigma" and value <= 0:
                raise ConfigError("sigma sweep values must be positive")
            if self.sweep_variable == "q_max" and not self.q_min <= value:
                raise ConfigError("swept q_max below q_min")

    def _limit_for_n(self, n: int) -> int:
        if self.l_fraction is not None:
            return max(1, round(n * self.l_fraction))
        return self.l

    def cell(self, sweep_value: float | None) -> "ExperimentConfig":
        """The single-point config obtained by pinning the swept variable."""
        if sweep_value is None or self.sweep_variable is None:
            return replace(self, sweep_variable=None, sweep_values=None, l_fraction=None)
        base = {"sweep_variable": None, "sweep_values": None, "l_fraction": None}
        if self.sweep_variable == "L":
            return replace(self, l=int(sweep_value), **base)
        if self.sweep_variable == "q_max":
            return replace(self, q_max=float(sweep_value), **base)
        if self.sweep_variable == "sigma":
            return replace(self, sigma=float(sweep_value), **base)
        n = int(sweep_value)
        return replace(self, n=n, l=self._limit_for_n(n), **base)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_policies(text: str) -> tuple[PolicySpec, ...]:
    try:
        return tuple(PolicySpec.parse(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


_PARSERS = {
    "world": str,
    "n": int,
    "l": int,
    "horizon": int,
    "runs": int,
    "base_seed": int,
    "gamma": float,
    "policies": _parse_policies,
    "q_min": float,
    "q_max": float,
    "q_values": _parse_floats,
    "nonstationary": _parse_bool,
    "q_drift": float,
    "prior_q": float,
    "window_length": int,
    "forgetting": float,
    "band_width": int,
    "sigma": float,
    "band_memory": float,
    "age_over_selected": _parse_bool,
    "sweep_variable": str,
    "sweep_values": _parse_floats,
    "l_fraction": float,
}

assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key = value format into a validated config."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    config = ExperimentConfig(**values)
    config.validate()
    return config


def load_config(path) -> ExperimentConfig:
    """Read and parse a config file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config(handle.read())
