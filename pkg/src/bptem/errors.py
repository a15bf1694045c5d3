"""Exception types shared across the package."""


class BptemError(Exception):
    """Base class for all package errors."""


class ParameterError(BptemError, ValueError):
    """A scalar parameter or parameter combination is invalid."""


class GridMismatchError(BptemError, ValueError):
    """Two signals that must share a time grid do not."""


class AmplitudeBoundError(BptemError, ValueError):
    """Encoder input exceeds the amplitude bound the parameters assume."""


class InsufficientFiringsError(BptemError, ValueError):
    """Too few firing times to derive any measurement."""


class DegenerateQuantizationError(BptemError, RuntimeError):
    """Timing quantization scrambled the firing order beyond repair."""


class EncodingError(BptemError, RuntimeError):
    """Threshold-crossing search produced an inconsistent firing sequence."""


class DivergenceError(BptemError, RuntimeError):
    """An iterative decoder produced a non-finite or growing iterate."""


class SystemSizeError(BptemError, ValueError):
    """Closed-form system exceeds the dense solvable-size cap."""


class RankCollapseError(BptemError, RuntimeError):
    """All singular values fell below the pseudoinverse cutoff."""


class MetricError(BptemError, ValueError):
    """A quality metric is undefined for the given inputs."""


class TrialError(BptemError, RuntimeError):
    """A Monte Carlo trial failed; the message names the trial seed."""


class ConfigError(BptemError, ValueError):
    """Experiment configuration failed validation."""
