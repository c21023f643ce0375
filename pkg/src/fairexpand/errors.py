"""Exception hierarchy for the fairexpand package."""


class FairExpandError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(FairExpandError):
    """Invalid graph construction or incompatible graph operands."""


class SimilarityError(FairExpandError):
    """Similarity construction failed (e.g. no pair clears the threshold)."""


class MetricsError(FairExpandError):
    """Metric preconditions violated (empty mask, bad reference values)."""


class ExpansionError(FairExpandError):
    """Link-prediction expansion cannot produce the requested edges."""


class TrainingError(FairExpandError):
    """Training diverged or was called with inconsistent shapes."""


class DatasetError(FairExpandError):
    """Dataset files failed to parse or are mutually inconsistent."""


class ConfigError(FairExpandError):
    """Invalid configuration value or unparseable config file."""
