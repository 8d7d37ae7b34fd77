"""Exception types shared across the package."""


class BoostdfError(Exception):
    """Base class for all boostdf errors."""


class AllColumnsConstant(BoostdfError):
    """No covariate column is eligible for componentwise selection."""


class TooFewUniqueValues(BoostdfError):
    """Not enough distinct x-values to support the requested smoother."""


class CalibrationFailed(BoostdfError):
    """Smoothing-parameter search could not bracket or reach the target trace."""


class NoValidSplit(BoostdfError):
    """No admissible split exists (constant covariates or leaf-size bound)."""


class SingleClassInput(BoostdfError):
    """Binary-response fit called with only one class present."""


class DimensionMismatch(BoostdfError):
    """Prediction input has the wrong number of columns."""


class HatNotTracked(BoostdfError):
    """Operation needs the boosting hat operator but it was not recorded."""


class NoAdmissibleIteration(BoostdfError):
    """Information-criterion stopping found no iteration with a valid penalty."""


class UnknownModelId(BoostdfError):
    """Benchmark model identifier is not one of the built-in models."""


class LengthMismatch(BoostdfError):
    """Vectors that must be aligned have different lengths."""
