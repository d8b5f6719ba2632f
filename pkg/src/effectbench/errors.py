"""Exception hierarchy shared across the workbench."""


class EffectBenchError(Exception):
    """Base class for all workbench errors."""


class ParseError(EffectBenchError):
    """Malformed input bytes: bad CSV structure, unparseable dates."""


class ConfigError(EffectBenchError):
    """An analysis specification that cannot be applied to the data."""


class DataError(EffectBenchError):
    """Data that is structurally valid but degenerate for the requested task."""


class FitError(EffectBenchError):
    """A model fit that failed: collinearity, separation, non-convergence."""
