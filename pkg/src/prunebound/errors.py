"""Exception hierarchy shared across the package.

Two failure families matter to the CLI: validation failures (bad inputs,
malformed files, broken preconditions) map to exit code 1, numerical
failures (non-convergence, divergence, infeasible parameter choices) map
to exit code 2.
"""


class PruneboundError(Exception):
    """Base class for all package errors."""


class ValidationFailure(PruneboundError):
    """Bad input: malformed file, dimension mismatch, out-of-domain argument."""


class NumericalFailure(PruneboundError):
    """Numerical procedure failed: divergence, non-convergence, infeasibility."""


class DimensionMismatchError(ValidationFailure):
    pass


class PowerIterationError(NumericalFailure):
    """Power iteration did not converge; carries the last iterate and residual."""

    def __init__(self, message, last_estimate, residual, iterations):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.residual = residual
        self.iterations = iterations


class IdxFormatError(ValidationFailure):
    """IDX file does not start with the expected magic number."""


class IdxTruncatedError(ValidationFailure):
    """IDX file ends before the payload declared in its header."""


class IdxLabelError(ValidationFailure):
    """IDX label file contains a label outside the valid class range."""


class ModelFormatError(ValidationFailure):
    """Model container is malformed: bad magic, version, or checksum."""


class TrainingDivergedError(NumericalFailure):
    """Training loss became non-finite; carries the offending epoch."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class InfeasibleGridError(NumericalFailure):
    """The discretization pitch formula is non-positive: the per-layer error
    budget is already exhausted by the pruning term."""


class HypothesisViolationError(NumericalFailure):
    """A perturbation exceeds the layerwise budget required by the bound;
    carries the offending layer index."""

    def __init__(self, message, layer):
        super().__init__(message)
        self.layer = layer


class RecoveryError(NumericalFailure):
    """Sketch recovery did not reach the requested constraint residual."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
