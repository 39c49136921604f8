"""Exception types shared across the loghound modules."""


class LoghoundError(Exception):
    """Base class for all loghound-specific errors."""


class MalformedLine(LoghoundError):
    """A log line could not be parsed in the declared format."""


class InvalidStatus(MalformedLine):
    """HTTP status code outside the 100..599 range."""


class EmptyDataset(LoghoundError):
    """No usable records were found in the input."""


class ScalerMismatch(LoghoundError):
    """Feature matrix column count does not match the fitted scaler."""


class TooFewPoints(LoghoundError):
    """Fewer data points than requested clusters."""


class DimensionMismatch(LoghoundError):
    """Input feature count does not match the model."""


class UnsupportedK(LoghoundError):
    """Tier labelling only covers 2- and 3-cluster models."""


class TooFewRows(LoghoundError):
    """Not enough rows to produce a train/test split."""


class DegenerateLabels(LoghoundError):
    """Classifier training requires at least two distinct labels."""


class NonFiniteLoss(LoghoundError):
    """Training loss became NaN or infinite."""


class ZeroMaxRate(LoghoundError):
    """Likelihood scoring needs a positive maximum rate."""


class ScoreOutOfRange(LoghoundError):
    """Audited classifier returned a score outside [0, 1]."""


class EmptyGroup(LoghoundError):
    """Disparate impact needs samples in both protected groups."""


class InvalidConfig(LoghoundError):
    """Synthetic generator configuration violates its invariants."""
