from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from errors import NotSummableError, ValidationError


@dataclass(frozen=True)
class GeometricTail:
    """Хвост a·r^(n−N) при n > N. Первый член хранится и логарифмом: a может уйти в underflow."""

    a: float = field(compare=False)
    r: float
    log_a: Optional[float] = None

    def __post_init__(self):
        r = float(self.r)
        if not (math.isfinite(r) and 0 < r < 1):
            raise NotSummableError(f"geometric tail with r={self.r!r} is not summable (need 0 < r < 1)")
        if self.log_a is None:
            a = float(self.a)
            if not (math.isfinite(a) and a > 0):
                raise ValidationError(f"geometric tail needs a > 0, got {self.a!r}", "tail")
            log_a = math.log(a)
        else:
            log_a = float(self.log_a)
            if not (math.isfinite(log_a) and log_a < 710.0):
                raise ValidationError(f"geometric tail needs a finite log a, got {self.log_a!r}", "tail")
            a = math.exp(log_a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "log_a", log_a)

    @classmethod
    def from_log(cls, log_a: float, r: float) -> "GeometricTail":
        return cls(0.0, r, log_a=log_a)

    def total(self) -> float:
        return self.a * self.r / (1.0 - self.r)


# ==================== ПОСЛЕДОВАТЕЛЬНОСТИ ИЗ ℓ¹ ====================
@dataclass(frozen=True)
class L1Sequence:
    """Диагональный оператор следового класса: конечный префикс + геометрический хвост.

    Индексы с единицы. Нули в префиксе означают пропуски носителя.
    """

    prefix: tuple[float, ...] = ()
    tail: Optional[GeometricTail] = None

    def __post_init__(self):
        values = tuple(float(v) for v in self.prefix)
        for i, v in enumerate(values, start=1):
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"sequence value at index {i} must be finite and >= 0, got {v!r}", "nonnegative")
        object.__setattr__(self, "prefix", values)

    @classmethod
    def geometric(cls, a: float, r: float, prefix: Sequence[float] = ()) -> "L1Sequence":
        return cls(tuple(prefix), GeometricTail(a, r))

    @property
    def N(self) -> int:
        return len(self.prefix)

    @property
    def infinite_support(self) -> bool:
        return self.tail is not None

    def value(self, n: int) -> float:
        if n < 1:
            raise ValidationError(f"indices start at 1, got {n}", "index")
        if n <= self.N:
            return self.prefix[n - 1]
        if self.tail is None:
            return 0.0
        if self.tail.a > 0:
            return self.tail.a * self.tail.r ** (n - self.N)
        return math.exp(self.log_value(n))

    def log_value(self, n: int) -> float:
        """log x_n без переполнения снизу; −inf для нуля."""
        if n <= self.N or self.tail is None:
            v = self.value(n)
            return math.log(v) if v > 0 else -math.inf
        return self.tail.log_a + (n - self.N) * math.log(self.tail.r)

    def values(self, count: int) -> np.ndarray:
        out = np.zeros(count)
        head = min(count, self.N)
        out[:head] = self.prefix[:head]
        if self.tail is not None and count > self.N:
            m = np.arange(1, count - self.N + 1)
            out[self.N:] = np.exp(self.tail.log_a + m * math.log(self.tail.r))
        return out

    def total(self) -> float:
        """Сумма в замкнутой форме: префикс + a·r/(1−r)."""
        head = math.fsum(self.prefix)
        return head + (self.tail.total() if self.tail is not None else 0.0)

    def partial_sum(self, count: int) -> float:
        return math.fsum(self.values(count))

    def rebase(self, horizon: int) -> "L1Sequence":
        """Развернуть хвост в префикс до индекса horizon (значения не меняются)."""
        if horizon <= self.N:
            return self
        prefix = tuple(self.values(horizon))
        if self.tail is None:
            return L1Sequence(prefix, None)
        return L1Sequence(prefix, GeometricTail.from_log(self.log_value(horizon), self.tail.r))

    def support_prefix(self, horizon: int) -> np.ndarray:
        return self.values(horizon) > 0


@dataclass(frozen=True)
class RatioCertificate:
    """bounded: c = sup x_n/y_n (достигается в index); unbounded: пары (B, n) с x_n/y_n ≥ B."""

    kind: str
    c: Optional[float] = None
    index: Optional[int] = None
    witnesses: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("bounded", "unbounded"):
            raise ValidationError(f"unknown certificate kind {self.kind!r}", "certificate")

    @property
    def bounded(self) -> bool:
        return self.kind == "bounded"

    def witness(self, bound: float) -> Optional[int]:
        for b, n in self.witnesses:
            if b == bound:
                return n
        return None

    def as_dict(self) -> dict:
        if self.bounded:
            return {"kind": "bounded", "c": self.c, "index": self.index}
        return {"kind": "unbounded", "witnesses": [{"bound": b, "index": n} for b, n in self.witnesses]}
