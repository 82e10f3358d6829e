"""Exception types raised across the package.

Every error derives from :class:`CorrelationError`, itself a ``ValueError``,
so callers can catch the whole family or a single failure mode.
"""


class CorrelationError(ValueError):
    pass


class NotSquare(CorrelationError):
    pass


class NotHermitian(CorrelationError):
    pass


class DiagonalNotUnit(CorrelationError):
    pass


class NotPSD(CorrelationError):
    pass


class NonFinite(CorrelationError):
    pass


class DimensionMismatch(CorrelationError):
    pass


class IndexOutOfRange(CorrelationError):
    pass


class DuplicateIndex(CorrelationError):
    pass


class RankTooLow(CorrelationError):
    pass


class PivotNotIndependent(CorrelationError):
    pass


class InvalidRank(CorrelationError):
    pass


class NoIndependentPivot(CorrelationError):
    """No generating vector is independent of the rest while rank > r.

    Carries the factors peeled so far and the remaining matrix so that the
    caller can inspect where the loop got stuck.
    """

    def __init__(self, message, factors=(), remainder=None):
        super().__init__(message)
        self.factors = list(factors)
        self.remainder = remainder


class NotRankOne(CorrelationError):
    pass


class NotUnimodular(CorrelationError):
    pass


class NormalizationViolated(CorrelationError):
    pass


class BadParameter(CorrelationError):
    pass


class BadP(BadParameter):
    pass


class BadRank(BadParameter):
    pass


class StructureMismatch(CorrelationError):
    pass


class MissingPair(CorrelationError):
    pass


class ZeroVector(CorrelationError):
    pass


class FactorsMissing(CorrelationError):
    pass


class NotProduct(CorrelationError):
    pass


class NotIndependent(CorrelationError):
    pass


class ZeroCoefficient(CorrelationError):
    pass


class MalformedDocument(CorrelationError):
    pass
