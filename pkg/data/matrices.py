from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from errors import DimensionMismatchError, NotHermitianError, NotPsdError, ValidationError

log = logging.getLogger("lebesgue.psd")

HERMITIAN_TOL = 1e-12
DEFAULT_PSD_TOL = 1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpectralDecomp:
    """A = V·diag(λ)·V*, собственные значения по невозрастанию."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _frozen(self.eigenvectors))

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0]) if self.eigenvalues.size else 0.0

    def reconstruct(self, values: Optional[np.ndarray] = None) -> np.ndarray:
        lam = self.eigenvalues if values is None else values
        V = self.eigenvectors
        return (V * lam) @ V.conj().T


def spectral(entries: np.ndarray) -> SpectralDecomp:
    # scipy отдаёт по возрастанию, разворачиваем
    w, V = sla.eigh(entries)
    return SpectralDecomp(w[::-1].copy(), V[:, ::-1].copy())


def _as_square(entries) -> np.ndarray:
    a = np.asarray(entries)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}", "square")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries", "finite")
    if np.iscomplexobj(a):
        if np.all(a.imag == 0):
            return a.real.astype(np.float64)
        return a.astype(np.complex128)
    return a.astype(np.float64)


# ==================== ЭРМИТОВЫ МАТРИЦЫ ====================
@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = _as_square(self.entries)
        diff = np.abs(a - a.conj().T)
        tol = HERMITIAN_TOL * max(float(np.max(np.abs(a))), 1.0)
        worst = float(diff.max())
        if worst > tol:
            i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
            raise NotHermitianError(
                f"matrix is not Hermitian: entries ({i}, {j}) and ({j}, {i}) "
                f"differ by {worst:.3e} > {tol:.1e}",
                pair=(int(i), int(j)),
            )
        object.__setattr__(self, "entries", _frozen((a + a.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} dim={self.dim}>"


# ==================== ПОЛОЖИТЕЛЬНЫЕ МАТРИЦЫ ====================
@dataclass(frozen=True, eq=False)
class PsdMatrix(HermitianMatrix):
    """Конечномерная модель положительного оператора следового класса.

    Собственные значения из полосы [-psd_tol·λ_max, 0) обнуляются при
    построении, более отрицательные дают ошибку. λ_max берётся с полом 1.
    """

    psd_tol: float = DEFAULT_PSD_TOL
    spectrum: SpectralDecomp = field(init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        spec = spectral(self.entries)
        scale = max(spec.lambda_max, 1.0)
        lam_min = float(spec.eigenvalues[-1])
        if lam_min < -self.psd_tol * scale:
            raise NotPsdError(
                f"matrix is not positive semidefinite: eigenvalue {lam_min:.3e} "
                f"below -{self.psd_tol:.1e}*{scale:.3e}"
            )
        if lam_min < 0:
            clipped = np.clip(spec.eigenvalues, 0.0, None)
            rebuilt = spec.reconstruct(clipped)
            if not np.iscomplexobj(self.entries):
                rebuilt = rebuilt.real
            rebuilt = (rebuilt + rebuilt.conj().T) / 2
            object.__setattr__(self, "entries", _frozen(rebuilt))
            spec = SpectralDecomp(clipped, spec.eigenvectors)
        object.__setattr__(self, "spectrum", spec)

    @property
    def lambda_max(self) -> float:
        return self.spectrum.lambda_max

    # ---- конструкторы ----
    @classmethod
    def of(cls, entries, psd_tol: float = DEFAULT_PSD_TOL) -> "PsdMatrix":
        """Построить из «почти эрмитова» результата вычислений (симметризуем до проверки)."""
        a = np.asarray(entries)
        return cls((a + a.conj().T) / 2, psd_tol=psd_tol)

    @classmethod
    def zeros(cls, dim: int) -> "PsdMatrix":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim: int) -> "PsdMatrix":
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "PsdMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))


def as_array(a) -> np.ndarray:
    if isinstance(a, HermitianMatrix):
        return a.entries
    return np.asarray(a)


def same_dims(*mats) -> int:
    dims = {as_array(m).shape for m in mats}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")
    shape = dims.pop()
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatchError(f"expected square matrices, got shape {shape}")
    return shape[0]
