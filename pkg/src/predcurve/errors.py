"""Exception taxonomy.

ValidationError covers problems with user-supplied data or configuration
(CLI exit code 2); EstimationError covers numerical failures encountered
while estimating (CLI exit code 3).
"""


class PredcurveError(Exception):
    pass


class ValidationError(PredcurveError):
    pass


class EstimationError(PredcurveError):
    pass


# -- dataset / config validation -----------------------------------------

class NegativeTime(ValidationError):
    pass


class BadEventCode(ValidationError):
    pass


class RaggedCovariates(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class NoCause1Events(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class TooFewRecords(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class UnknownSetting(ValidationError):
    pass


class BadConfig(ValidationError):
    pass


# -- censoring / weighting ------------------------------------------------

class AllWeightsZero(ValidationError):
    pass


class ZeroGhatAtDeterminable(ValidationError):
    """The censoring survivor estimate vanishes where a determinable
    subject needs reweighting: tau lies beyond the censoring support and
    must be lowered."""


# -- numerical fitting ----------------------------------------------------

class SingularInformation(EstimationError):
    pass


class NotConverged(EstimationError):
    pass


class DegenerateScores(EstimationError):
    pass


class DegenerateResponses(EstimationError):
    pass


class TooFewReplicates(EstimationError):
    pass


class HalfEstimateFailed(EstimationError):
    """A stage of the half-sample pipeline failed; `stage` names it and
    __cause__ carries the underlying error."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.__cause__ = cause
