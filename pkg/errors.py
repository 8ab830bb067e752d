"""
Error hierarchy for the term-structure kernel engine.

Every error may carry the CheckReport of the invariant that failed and the
witness node (depth, node index) where it failed.
"""

from typing import Optional, Tuple


class TermStructureError(ValueError):
    """Root of all model errors."""

    def __init__(self, message: str, report=None, node: Optional[Tuple[int, int]] = None):
        self.report = report
        if node is None and report is not None:
            node = getattr(report, "witness", None)
        self.node = node
        if node is not None:
            message = f"{message} (at depth {node[0]}, node {node[1]})"
        super().__init__(message)


# ------------------------------------------------------------------------------
# Filtration
# ------------------------------------------------------------------------------
class FiltrationError(TermStructureError):
    pass


class NonPositiveProbability(FiltrationError):
    pass


class ProbabilitySumMismatch(FiltrationError):
    pass


class NonIncreasingTimes(FiltrationError):
    pass


class InvalidTreeStructure(FiltrationError):
    pass


class DepthOrderViolation(FiltrationError):
    pass


class ProcessNotDefinedAtDepth(FiltrationError):
    pass


class ProcessShapeMismatch(FiltrationError):
    pass


class EmptyRange(FiltrationError):
    pass


class RangeStartsAtRoot(FiltrationError):
    pass


# ------------------------------------------------------------------------------
# Kernel
# ------------------------------------------------------------------------------
class KernelError(TermStructureError):
    pass


class NonPositiveKernel(KernelError):
    pass


class NotStrictSupermartingale(KernelError):
    pass


class ScheduleNotDecreasing(KernelError):
    pass


class NotAMartingale(KernelError):
    pass


class NonPositiveMartingale(KernelError):
    pass


class NotStrictlyIncreasing(KernelError):
    pass


class NonZeroInitialValue(KernelError):
    pass


class ZeroKernelInsideHorizon(KernelError):
    pass


class HorizonTooShort(KernelError):
    pass


class InternalInvariantError(KernelError):
    """A postcondition guaranteed by the theory failed; signals a bug."""


# ------------------------------------------------------------------------------
# Bonds and assets
# ------------------------------------------------------------------------------
class BondError(TermStructureError):
    pass


class IndexOutOfRange(BondError):
    pass


class AssetError(TermStructureError):
    pass


class DividendOutsideHorizon(AssetError):
    pass


class AxiomAViolation(AssetError):
    pass


class NotPrevisible(AssetError):
    pass


class NegativeCashFlow(AssetError):
    pass


# ------------------------------------------------------------------------------
# Model generators
# ------------------------------------------------------------------------------
class ModelSpecError(TermStructureError):
    pass


class MartingaleConditionViolated(ModelSpecError):
    pass


class TreeNotBinary(ModelSpecError):
    pass


class ExtinctionMassPresent(ModelSpecError):
    pass


class SupportTooLarge(ModelSpecError):
    pass


class NotStrictlyDecreasing(ScheduleNotDecreasing):
    pass


class NonPositive(ModelSpecError):
    pass


# ------------------------------------------------------------------------------
# Configuration document
# ------------------------------------------------------------------------------
class ConfigParseError(TermStructureError):
    """Malformed model configuration; carries a line/column or a field path."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.field = field
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if field:
            where.append(f"field '{field}'")
        if where:
            message = f"{message} [{'; '.join(where)}]"
        super().__init__(message)
