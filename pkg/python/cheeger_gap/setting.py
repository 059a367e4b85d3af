"""
Data types for settings of the cheeger_gap library.

Settings are layered: dataclass defaults, then `CHEEGER_GAP_*` environment
variables, then a `key=value` config file, then explicit overrides (CLI flags).
"""

from __future__ import annotations

import dataclasses
import os
from typing import Any, Callable, Literal, Mapping, Self

from dotenv import dotenv_values

from .errors import ConfigurationError
from .model import ModelSpec

ENV_PREFIX = "CHEEGER_GAP_"

DomainMode = Literal["auto", "all-feasible-subsets", "subsets-of-s"]
PhiMethod = Literal["auto", "exact", "candidate"]

DOMAIN_MODES: tuple[str, ...] = ("auto", "all-feasible-subsets", "subsets-of-s")
PHI_METHODS: tuple[str, ...] = ("auto", "exact", "candidate")
STRATEGIES: tuple[str, ...] = ("cut-only", "cut-plus-paths", "full")


def _parse_optional_int(value: str) -> int | None:
    value = value.strip()
    if value == "" or value.lower() == "none":
        return None
    return int(value)


@dataclasses.dataclass(frozen=True)
class RunSettings:
    """Tolerances and limits shared by every operation."""

    # Eigensolver residual tolerance.
    tol: float = 1e-10
    # Gaps below this flag the spectral pair as near-degenerate.
    degeneracy_tol: float = 1e-8
    # Slack on the C_S <= 1/2 feasibility constraint.
    cap_tol: float = 1e-12
    # Relative tolerance on max-flow value checks.
    flow_tol: float = 1e-6
    # Absolute tolerance on per-node flow constraints after descaling.
    flow_abs_tol: float = 1e-9
    dense_limit: int = 4096
    enum_limit: int = 24
    subset_limit: int = 22
    n_max: int = 20
    max_iter: int = 100_000
    flow_scale_bits: int = 30
    # None means the CHEEGER_GAP_THREADS default (or 1).
    threads: int | None = None
    seed: int = 42

    def __post_init__(self) -> None:
        for name in ("dense_limit", "enum_limit", "subset_limit", "n_max", "max_iter"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("tol", "degeneracy_tol", "flow_tol", "flow_abs_tol"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.cap_tol < 0:
            raise ConfigurationError(f"cap_tol must be non-negative, got {self.cap_tol}")
        if self.threads is not None and self.threads <= 0:
            raise ConfigurationError(f"threads must be positive, got {self.threads}")

    @classmethod
    def field_parsers(cls) -> dict[str, Callable[[str], Any]]:
        parsers: dict[str, Callable[[str], Any]] = {}
        for field in dataclasses.fields(cls):
            if field.name == "threads":
                parsers[field.name] = _parse_optional_int
            elif field.type in ("int", int):
                parsers[field.name] = int
            else:
                parsers[field.name] = float
        return parsers

    @classmethod
    def from_env(cls) -> Self:
        """Load settings from environment variables."""
        kwargs: dict[str, Any] = {}
        for name, parse in cls.field_parsers().items():
            _load_field(kwargs, name, ENV_PREFIX + name.upper(), parse=parse)
        return cls(**kwargs)

    def with_mapping(self, values: Mapping[str, str | None], source: str) -> Self:
        """Return a copy with string `values` (e.g. from a config file) applied."""
        parsers = self.field_parsers()
        kwargs: dict[str, Any] = {}
        for key, raw in values.items():
            name = key.strip().lower().replace("-", "_")
            if name not in parsers:
                raise ConfigurationError(f"{source}: unknown setting '{key}'")
            if raw is None:
                raise ConfigurationError(f"{source}: setting '{key}' has no value")
            try:
                kwargs[name] = parsers[name](raw)
            except ValueError as e:
                raise ConfigurationError(f"{source}: failed to parse '{key}': {raw}") from e
        return dataclasses.replace(self, **kwargs)

    def with_config_file(self, path: str) -> Self:
        return self.with_mapping(dotenv_values(path), source=path)

    def with_overrides(self, **overrides: Any) -> Self:
        """Return a copy with non-None overrides applied."""
        return dataclasses.replace(
            self, **{k: v for k, v in overrides.items() if v is not None}
        )


def _load_field(
    target: dict[str, Any],
    name: str,
    env_name: str,
    required: bool = False,
    parse: Callable[[str], Any] | None = None,
) -> None:
    value = os.getenv(env_name)
    if value is None:
        if required:
            raise ConfigurationError(f"{env_name} is not set")
    else:
        if parse is None:
            target[name] = value
        else:
            try:
                target[name] = parse(value)
            except Exception as e:
                raise ConfigurationError(
                    f"failed to parse environment variable {env_name}: {value}"
                ) from e


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs: the model plus how to analyse it."""

    model: ModelSpec
    settings: RunSettings = dataclasses.field(default_factory=RunSettings)
    strategies: tuple[str, ...] = STRATEGIES
    domain: DomainMode = "auto"
    phi_method: PhiMethod = "auto"
    output: str | None = None

    def __post_init__(self) -> None:
        if not self.strategies:
            raise ConfigurationError("at least one reduction strategy is required")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ConfigurationError(
                    f"unknown strategy '{strategy}'; expected one of {', '.join(STRATEGIES)}"
                )
        if self.domain not in DOMAIN_MODES:
            raise ConfigurationError(f"unknown domain mode '{self.domain}'")
        if self.phi_method not in PHI_METHODS:
            raise ConfigurationError(f"unknown phi method '{self.phi_method}'")
