"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class StepDedupError(Exception):
    """Base class for all errors raised deliberately by this package."""


class ConfigError(StepDedupError):
    pass


class DataError(StepDedupError, ValueError):
    pass


class ProviderError(StepDedupError):
    """An embedding provider failed; carries the provider name and text index."""

    def __init__(self, provider: str, index: int | None, message: str) -> None:
        where = f" at index {index}" if index is not None else ""
        super().__init__(f"embedding provider {provider!r} failed{where}: {message}")
        self.provider = provider
        self.index = index
