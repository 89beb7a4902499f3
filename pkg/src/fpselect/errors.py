"""Exception hierarchy shared across the package."""


class ModelBuildError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ModelBuildError):
    """An argument is outside the mathematical domain of the operation."""


class RankDeficientError(ModelBuildError):
    """Design matrix unusable even after dropping aliased columns."""


class NotNestedError(ModelBuildError):
    """Likelihood-ratio test called on fits that are not nested."""


class DegenerateVariableError(ModelBuildError):
    """Variable is constant (or otherwise carries no usable variation)."""


class TooFewDistinctValuesError(ModelBuildError):
    """Variable has too few distinct values for the requested procedure."""


class NoSpikeError(ModelBuildError):
    """Variable has no zeros; spike-at-zero decomposition does not apply."""


class AllZeroError(ModelBuildError):
    """Variable is identically zero."""


class ExposureMissingError(ModelBuildError):
    """Exposure term not present in the starting model."""


class CycleDetectedError(ModelBuildError):
    """Stepwise selection cannot terminate with the given thresholds."""


class FoldFitFailureError(ModelBuildError):
    """A cross-validation training fold could not be fitted."""

    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fit failed on training fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


class CollinearComponentsError(ModelBuildError):
    """Shrinkage components are collinear; factors are unidentifiable."""


class RangeEmptyError(ModelBuildError):
    """No admissible cutpoint candidate in the requested search range."""


class InvalidCorrelationError(ModelBuildError):
    """Correlation matrix is not symmetric positive definite."""


class ConfigError(ModelBuildError):
    """Invalid analysis configuration (CLI exit code 2)."""


class DataError(ModelBuildError):
    """Invalid input data (CLI exit code 3)."""
