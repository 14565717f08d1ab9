from __future__ import annotations

from typing import Any, Optional


class LebesgueError(Exception):
    """Базовое исключение пакета."""


# ==================== ВХОДНЫЕ ДАННЫЕ ====================
class ValidationError(LebesgueError):
    """Нарушен инвариант входного объекта. `invariant`: его короткое имя."""

    invariant = "input"

    def __init__(self, message: str, invariant: Optional[str] = None):
        super().__init__(message)
        if invariant is not None:
            self.invariant = invariant


class NotHermitianError(ValidationError):
    invariant = "hermitian"

    def __init__(self, message: str, pair: tuple[int, int]):
        super().__init__(message)
        self.pair = pair


class NotPsdError(ValidationError):
    invariant = "psd"


class DimensionMismatchError(ValidationError):
    invariant = "dimension"


class SchemaError(ValidationError):
    invariant = "schema"


class NotSummableError(ValidationError):
    invariant = "summable"


class ConfigError(ValidationError):
    invariant = "config"


# ==================== ВЫЧИСЛЕНИЯ ====================
class ConvergenceError(LebesgueError):
    """Итерация не сошлась за max_iters; трасса приложена."""

    def __init__(self, message: str, trace: Any):
        super().__init__(message)
        self.trace = trace


class InternalConsistencyError(LebesgueError):
    """Два независимых способа дали разные ответы (обычно из-за плохих допусков)."""

    def __init__(self, message: str, *candidates: Any):
        super().__init__(message)
        self.candidates = candidates


class PreconditionError(LebesgueError):
    pass


class FiniteRankError(PreconditionError):
    pass


class DegenerateFunctionalError(PreconditionError):
    pass
