"""Run configuration, provider selection and provenance hashing."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Any

from .detector import Strategy, StrategyConfig
from .errors import ConfigError
from .identity import DEFAULT_SYNONYMS, SynonymTable, load_synonyms
from .similarity import EmbeddingProvider, ExternalProvider, FallbackProvider

ENDPOINT_ENV = "STEPDEDUP_PROVIDER_ENDPOINT"
FORMATS = ("json", "csv", "columnar", "html")


@dataclass(frozen=True)
class RunConfig:
    strategies: tuple[str, ...] = tuple(s.value for s in Strategy)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    provider: str = "fallback"
    seed: int = 0
    bootstrap_resamples: int = 10_000
    folds: int = 5
    formats: tuple[str, ...] = ("json", "csv")
    synonyms: str | None = None
    allow_large: bool = False
    attribution: str = "repo_local"
    license_overrides: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for s in self.strategies:
            try:
                Strategy(s)
            except ValueError:
                raise ConfigError(f"unknown strategy {s!r}") from None
        for f in self.formats:
            if f not in FORMATS:
                raise ConfigError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
        if self.attribution not in ("repo_local", "proportional"):
            raise ConfigError(f"unknown attribution {self.attribution!r}")
        if not (self.provider == "fallback" or self.provider.startswith("external")):
            raise ConfigError(f"unknown provider {self.provider!r}; use 'fallback' or 'external:<endpoint>'")

    def to_dict(self) -> dict[str, Any]:
        return {
            "strategies": list(self.strategies),
            "strategy": self.strategy.to_dict(),
            "provider": self.provider,
            "seed": self.seed,
            "bootstrap_resamples": self.bootstrap_resamples,
            "folds": self.folds,
            "formats": list(self.formats),
            "synonyms": self.synonyms,
            "allow_large": self.allow_large,
            "attribution": self.attribution,
            "license_overrides": dict(sorted(self.license_overrides.items())),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def with_overrides(self, **kw: Any) -> RunConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_config(path: str | os.PathLike[str]) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kw = dict(data)
    if "strategy" in kw:
        kw["strategy"] = StrategyConfig.from_dict(kw["strategy"])
    for key in ("strategies", "formats"):
        if key in kw:
            kw[key] = tuple(kw[key])
    try:
        return RunConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def make_provider(spec: str) -> EmbeddingProvider:
    """``fallback`` or ``external:<command-or-url>``; the env var overrides the endpoint."""
    if spec == "fallback":
        return FallbackProvider()
    endpoint = os.environ.get(ENDPOINT_ENV) or spec.partition(":")[2]
    if not endpoint:
        raise ConfigError(f"external provider needs an endpoint (external:<endpoint> or ${ENDPOINT_ENV})")
    return ExternalProvider(endpoint)


def load_synonym_table(path: str | None) -> SynonymTable:
    if path is None:
        return DEFAULT_SYNONYMS
    try:
        return load_synonyms(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad synonym table {path}: {exc}") from None
