"""Static duplicate-step detection for Gherkin suites, with calibration and savings tooling."""

from importlib import import_module

__version__ = "0.1.0"

# Loaded on first access so that importing a light submodule (the score-free
# labeller in particular) does not drag in the similarity engines.
_EXPORTS = {
    "Cluster": "detector",
    "Strategy": "detector",
    "StrategyConfig": "detector",
    "detect": "detector",
    "duplication_rate": "detector",
    "match_pair": "detector",
    "per_repo_rates": "detector",
    "FeatureFile": "gherkin",
    "Step": "gherkin",
    "parse_feature": "gherkin",
    "scan_tree": "gherkin",
    "StepOccurrence": "identity",
    "step_identity": "identity",
    "tokenize": "identity",
    "whitespace_collapse": "identity",
}

__all__ = sorted([*_EXPORTS, "__version__"])


def __getattr__(name: str):
    if name in _EXPORTS:
        value = getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
        globals()[name] = value
        return value
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__() -> list[str]:
    return __all__
