from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from data.matrices import PsdMatrix
from data.sequences import L1Sequence
from errors import ValidationError

Rep = Union[PsdMatrix, L1Sequence]


@dataclass(frozen=True, eq=False)
class NormalFunctional:
    """f_T(A) = trace(A·T); функционал хранится своим оператором, а не замыканием."""

    rep: Rep
    label: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.rep, (PsdMatrix, L1Sequence)):
            raise ValidationError(
                f"functional needs a PSD matrix or an l1 sequence, got {type(self.rep).__name__}", "psd"
            )

    @property
    def kind(self) -> str:
        return "matrix" if isinstance(self.rep, PsdMatrix) else "sequence"

    @property
    def is_matrix(self) -> bool:
        return self.kind == "matrix"

    def __repr__(self) -> str:
        name = self.label or "f"
        return f"<NormalFunctional {name} kind={self.kind}>"
