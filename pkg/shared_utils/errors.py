"""
errors.py — Exception and warning types shared by every package.

Three bases decide the CLI exit code:
  InputError       → 2  (bad input, schema, preconditions)
  NumericalError   → 3  (non-finite losses, degenerate statistics)
  PairingMismatch  → 4  (two inputs scored on different sample ids)
"""


class InputError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class PairingMismatch(InputError):
    def __init__(self, message: str, offenders: list | None = None):
        super().__init__(message)
        self.offenders = list(offenders or [])


# ─── embedding geometry ─────────────────────────────────────────────────────
class DimensionMismatch(InputError):
    pass


class NonPositiveTemperature(InputError):
    pass


class NonUnitNorm(InputError):
    pass


class BatchTooSmall(InputError):
    pass


class InvalidClassIndex(InputError):
    pass


# ─── kernels and losses ─────────────────────────────────────────────────────
class NonPositiveBandwidth(InputError):
    pass


class TooFewSamples(InputError):
    pass


class LengthMismatch(InputError):
    pass


class NonFiniteLoss(NumericalError):
    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


# ─── cohorts ────────────────────────────────────────────────────────────────
class EmptySpec(InputError):
    pass


class BadFractions(InputError):
    pass


class UnknownSpec(InputError):
    pass


# ─── fairness metrics ───────────────────────────────────────────────────────
class NoEligibleSubgroups(InputError):
    pass


class DegeneratePopulation(InputError):
    pass


# ─── statistics ─────────────────────────────────────────────────────────────
class SingleClass(InputError):
    pass


class DegenerateVariance(NumericalError):
    pass


class AllZeroDifferences(InputError):
    pass


class DegeneratePooled(NumericalError):
    pass


class RetryCapExceeded(NumericalError):
    pass


# ─── files ──────────────────────────────────────────────────────────────────
class SchemaError(InputError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field:
            prefix += f"{field}: "
        super().__init__(prefix + message)
        self.field = field
        self.line = line


class UnknownSchemaVersion(SchemaError):
    pass


# ─── non-fatal conditions (warnings) ────────────────────────────────────────
class DataQualityWarning(UserWarning):
    pass


class InfeasibleStratification(DataQualityWarning):
    pass


class DegenerateBandwidth(DataQualityWarning):
    pass


class ZeroBaselineFN(DataQualityWarning):
    pass


class EmptySubgroup(DataQualityWarning):
    pass


def exit_code_for(exc: BaseException) -> int:
    """Map an exception onto the documented CLI exit codes (1 for anything unexpected)."""
    if isinstance(exc, PairingMismatch):
        return 4
    if isinstance(exc, NumericalError):
        return 3
    if isinstance(exc, InputError):
        return 2
    return 1
