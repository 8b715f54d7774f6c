"""Exception hierarchy shared across the package."""


class UncrossError(Exception):
    """Base class for all package errors."""


class OffGridPrice(UncrossError):
    """Price is not on the tick grid."""


class NonPositiveQuantity(UncrossError):
    """Order quantity must be a positive integer."""


class UnknownOrderId(UncrossError):
    """MODIFY/CANCEL references an order id that is not live."""


class DuplicateOrderId(UncrossError):
    """SUBMIT re-uses an order id that is still live."""


class NoCross(UncrossError):
    """Supply and demand never intersect: no auction outcome exists."""


class AllocationInvariantError(UncrossError):
    """Matched/remaining accounting at the clearing price broke down.

    This only happens on pathological books where the rationed side's
    unfilled volume does not rest at the clearing price (e.g. one side
    consists solely of market orders or of limit prices strictly through
    the clearing price).
    """


class EmptySide(UncrossError):
    """No resting limit volume on the requested side."""


class MismatchedBinning(UncrossError):
    """Density profiles use different bin widths and cannot be combined."""


class DegenerateAuction(UncrossError):
    """Auction volume is zero; impact is undefined."""


class BeyondTruncation(UncrossError):
    """Queried volume lies past the computed portion of the impact curve."""


class NoPositiveRoot(UncrossError):
    """The post-clearing impact quadratic has no positive real root."""


class ZeroLiquidity(UncrossError):
    """Book liquidity estimate is not strictly positive."""


class TooFewPoints(UncrossError):
    """Not enough samples for the requested fit or report."""


class NonPositiveDensity(UncrossError):
    """Density samples must be strictly positive where sampled."""


class LengthMismatch(UncrossError):
    """Paired samples have different lengths."""


class DegenerateSample(UncrossError):
    """Sample is constant; the statistic is undefined."""


class EmptySample(UncrossError):
    """Sample is empty."""


class EmptyBatch(UncrossError):
    """No records in the batch."""


class InfeasibleConfig(UncrossError):
    """Flow generator configuration is self-contradictory."""


class ParseError(UncrossError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        super().__init__(f"{where}{message}")
