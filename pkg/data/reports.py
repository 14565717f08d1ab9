from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from data.matrices import PsdMatrix
from data.sequences import RatioCertificate
from errors import SchemaError


@dataclass(frozen=True, eq=False)
class IterationStep:
    k: int
    n: int                  # масштаб 2^k
    approximant: PsdMatrix
    trace: float
    gap: float              # ‖S_{k+1} − S_k‖₁
    c_bound: float          # наименьшее c с S_k ≤ c·T


@dataclass(frozen=True, eq=False)
class IterationTrace:
    steps: tuple[IterationStep, ...]
    converged: bool
    schedule: str = "parallel"

    @property
    def c_bound(self) -> tuple[float, ...]:
        return tuple(s.c_bound for s in self.steps)

    @property
    def last(self) -> Optional[IterationStep]:
        return self.steps[-1] if self.steps else None

    def rows(self) -> list[dict]:
        return [{"k": s.k, "n": s.n, "gap_trace": s.gap, "c_bound": s.c_bound} for s in self.steps]


@dataclass(frozen=True, eq=False)
class LebesgueDecomposition:
    ac: PsdMatrix
    sing: PsdMatrix
    trace_of_iteration: IterationTrace


@dataclass(frozen=True)
class UniquenessCertificate:
    unique: bool
    c: float = math.inf          # inf: не доминируется
    witness: Optional[str] = None
    ratio: Optional[RatioCertificate] = None

    @property
    def c_or_none(self) -> Optional[float]:
        return self.c if math.isfinite(self.c) else None

    def as_dict(self) -> dict:
        out: dict[str, Any] = {"unique": self.unique, "c": self.c_or_none}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.ratio is not None:
            out["ratio"] = self.ratio.as_dict()
        return out


# ==================== ОТЧЁТ ЗАПУСКА ====================
def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)


@dataclass(frozen=True)
class RunReport:
    """payload детерминирован; timing в хэш не входит."""

    inputs: dict
    result: dict
    tolerance: dict
    timing: dict = field(default_factory=dict)

    @property
    def payload(self) -> dict:
        return {"inputs": self.inputs, "result": self.result, "tolerance": self.tolerance}

    @property
    def payload_sha256(self) -> str:
        return hashlib.sha256(canonical_json(self.payload).encode("utf-8")).hexdigest()

    def as_dict(self) -> dict:
        return {"payload": self.payload, "payload_sha256": self.payload_sha256, "timing": self.timing}

    def to_json(self) -> str:
        return canonical_json(self.as_dict()) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        raw = json.loads(text)
        p = raw["payload"]
        report = cls(inputs=p["inputs"], result=p["result"], tolerance=p["tolerance"],
                     timing=raw.get("timing", {}))
        if report.payload_sha256 != raw.get("payload_sha256"):
            raise SchemaError("payload hash does not match report contents")
        return report
