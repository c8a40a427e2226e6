from typing import Any, Optional

class LAPMExceptionBase(Exception):...

class ExponentDomainError(LAPMExceptionBase, ValueError):...

class AdmissibilityError(LAPMExceptionBase, ValueError):
    def __init__(self, message: str, violations: Optional[list] = None):
        super().__init__(message)
        self.violations = violations or []

class ShapeError(LAPMExceptionBase, ValueError):...

class InvalidFieldError(LAPMExceptionBase, ValueError):...

class UsageError(LAPMExceptionBase, ValueError):...

class ParameterError(LAPMExceptionBase, ValueError):...

class MediumError(LAPMExceptionBase, ValueError):...

class SnapshotError(LAPMExceptionBase, ValueError):...

class InvalidConfigError(LAPMExceptionBase, ValueError):...

class ConfigNotFoundError(LAPMExceptionBase, FileNotFoundError):...

class SymbolError(LAPMExceptionBase, ArithmeticError):
    def __init__(self, message: str, xi: Any = None):
        super().__init__(message)
        self.xi = xi

class ResonanceError(LAPMExceptionBase, ArithmeticError):
    def __init__(self, message: str, xi_sq: Optional[float] = None):
        super().__init__(message)
        self.xi_sq = xi_sq

class SingularityError(LAPMExceptionBase, ZeroDivisionError):...

class ConvergenceError(LAPMExceptionBase, RuntimeError):
    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report

class ProbeError(LAPMExceptionBase, RuntimeError):...

# exit code 1: the input is wrong; exit code 2: the numerics failed
USER_ERRORS = (
    ExponentDomainError, AdmissibilityError, ShapeError, InvalidFieldError, UsageError,
    ParameterError, MediumError, SnapshotError, InvalidConfigError, ConfigNotFoundError,
)
NUMERICAL_ERRORS = (SymbolError, ResonanceError, SingularityError, ConvergenceError, ProbeError)
