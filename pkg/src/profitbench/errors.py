"""Exception hierarchy shared across the package."""


class ProfitbenchError(Exception):
    """Base class for all package errors."""


class SeriesTooShort(ProfitbenchError):
    def __init__(self, needed: int, got: int, what: str = "series"):
        self.needed = needed
        self.got = got
        super().__init__(f"{what} needs at least {needed} observations, got {got}")


class NonFiniteValue(ProfitbenchError):
    pass


class MisalignedExogenous(ProfitbenchError):
    pass


class MixedDatasets(ProfitbenchError):
    pass


class ZeroActual(ProfitbenchError):
    pass


class EmptySet(ProfitbenchError):
    pass


class ConstantSeries(ProfitbenchError):
    pass


class ConstantSeasonalSeries(ProfitbenchError):
    pass


class NotFitted(ProfitbenchError):
    pass


class NumericalFailure(ProfitbenchError):
    pass


class MissingExogForecastRow(ProfitbenchError):
    pass


class TooFewRows(ProfitbenchError):
    pass


class LengthMismatch(ProfitbenchError):
    pass


class TooShort(ProfitbenchError):
    pass


class TooFewFeatures(ProfitbenchError):
    pass


class AllGridPointsFailed(ProfitbenchError):
    pass


class NoCompleteRows(ProfitbenchError):
    pass


class DegenerateMatrix(ProfitbenchError):
    pass


class AllZeroDifferences(ProfitbenchError):
    pass


class EmptyCategory(ProfitbenchError):
    pass


class ParseError(ProfitbenchError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonContiguousMonths(ProfitbenchError):
    pass


class NegativeSales(ProfitbenchError):
    pass


class ConfigError(ProfitbenchError):
    pass


class TooFewModels(ProfitbenchError):
    pass
