"""Ядро: спектральное разложение, корень, псевдообратная, проекторы на образ,
порядок Лёвнера и следовые нормы для эрмитовых/положительных матриц."""
from __future__ import annotations

import logging
from typing import Optional, Union

import numpy as np
import scipy.linalg as sla

from data.matrices import HermitianMatrix, PsdMatrix, SpectralDecomp, as_array, same_dims, spectral
from data.tolerance import ToleranceConfig
from errors import InternalConsistencyError

log = logging.getLogger("lebesgue.psd")

MatrixLike = Union[HermitianMatrix, np.ndarray]

SPECTRAL_TOL = 1e-10


def default_config(cfg: Optional[ToleranceConfig] = None) -> ToleranceConfig:
    return cfg if cfg is not None else ToleranceConfig.from_settings()


def as_psd(a, cfg: Optional[ToleranceConfig] = None) -> PsdMatrix:
    if isinstance(a, PsdMatrix):
        return a
    cfg = default_config(cfg)
    return PsdMatrix(as_array(a), psd_tol=cfg.psd_tol)


# ==================== СПЕКТР ====================
def eigh(A: MatrixLike) -> SpectralDecomp:
    """Спектральное разложение с проверкой реконструкции и ортонормальности."""
    if isinstance(A, PsdMatrix):
        dec, a = A.spectrum, A.entries
    else:
        h = A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)
        a = h.entries
        dec = spectral(a)
    V = dec.eigenvectors
    err = np.linalg.norm(a - dec.reconstruct(), "fro")
    orth = np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1]), "fro")
    if err > SPECTRAL_TOL * max(1.0, np.linalg.norm(a, "fro")) or orth > SPECTRAL_TOL:
        raise InternalConsistencyError(
            f"spectral decomposition failed its checks (reconstruction {err:.2e}, orthogonality {orth:.2e})",
            dec,
        )
    return dec


def sqrt_psd(A: PsdMatrix) -> PsdMatrix:
    dec = A.spectrum
    root = dec.reconstruct(np.sqrt(dec.eigenvalues))
    return PsdMatrix.of(root, psd_tol=A.psd_tol)


def _inverse_values(values: np.ndarray, threshold: float) -> np.ndarray:
    inv = np.zeros_like(values)
    keep = values > threshold
    inv[keep] = 1.0 / values[keep]
    return inv


def pinv_psd(A: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> PsdMatrix:
    """Псевдообратная Мура–Пенроуза; λ ≤ rank_cutoff·λ_max считаются нулём."""
    cfg = default_config(cfg)
    dec = A.spectrum
    inv = _inverse_values(dec.eigenvalues, cfg.rank_cutoff * dec.lambda_max)
    return PsdMatrix.of(dec.reconstruct(inv), psd_tol=A.psd_tol)


def pinv_hermitian(a: np.ndarray, threshold: float) -> np.ndarray:
    """Псевдообратная эрмитовой части a с абсолютным порогом."""
    if a.size == 0:
        return np.zeros_like(a)
    values, V = sla.eigh((a + a.conj().T) / 2)
    return (V * _inverse_values(values, threshold)) @ V.conj().T


def _kept(A: PsdMatrix, cfg: ToleranceConfig, scale: Optional[float]) -> np.ndarray:
    ref = A.lambda_max if scale is None else scale
    return A.spectrum.eigenvalues > cfg.rank_cutoff * ref


def range_projection(A: PsdMatrix, cfg: Optional[ToleranceConfig] = None,
                     scale: Optional[float] = None) -> PsdMatrix:
    """Ортопроектор на образ A. `scale` подменяет λ_max в относительном пороге."""
    cfg = default_config(cfg)
    V = A.spectrum.eigenvectors[:, _kept(A, cfg, scale)]
    return PsdMatrix.of(V @ V.conj().T)


def rank(A: PsdMatrix, cfg: Optional[ToleranceConfig] = None, scale: Optional[float] = None) -> int:
    return int(np.count_nonzero(_kept(A, default_config(cfg), scale)))


def significant_factor(A: PsdMatrix, cfg: Optional[ToleranceConfig] = None,
                       scale: Optional[float] = None) -> np.ndarray:
    """F = V_r·diag(√λ_r) по значимым собственным значениям, F·F* ≈ A."""
    cfg = default_config(cfg)
    keep = _kept(A, cfg, scale)
    dec = A.spectrum
    return dec.eigenvectors[:, keep] * np.sqrt(dec.eigenvalues[keep])


def range_included(A: PsdMatrix, B: PsdMatrix, cfg: Optional[ToleranceConfig] = None,
                   scale: Optional[float] = None) -> bool:
    """ran A ⊆ ran B: доля фактора A вне ran B не больше rank_cutoff его нормы.

    `scale` задаёт масштаб, от которого отсчитывается значимость спектра A
    (например λ_max исходной S, когда A = [T]S): шум ниже rank_cutoff·scale
    в образ не входит.
    """
    cfg = default_config(cfg)
    same_dims(A, B)
    F = significant_factor(A, cfg, scale)
    if F.shape[1] == 0:
        return True
    P = range_projection(B, cfg).entries
    outside = F - P @ F
    ref = op_norm(F) if scale is None else max(op_norm(F), np.sqrt(scale))
    return op_norm(outside) <= cfg.rank_cutoff * ref


# ==================== ПОРЯДОК ЛЁВНЕРА ====================
def loewner_leq(A: PsdMatrix, B: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> bool:
    """A ≤ B ⇔ λ_min(B − A) ≥ −psd_tol·max(1, λ_max(B))."""
    cfg = default_config(cfg)
    same_dims(A, B)
    diff = as_array(B) - as_array(A)
    lam_min = float(sla.eigvalsh((diff + diff.conj().T) / 2)[0])
    return lam_min >= -cfg.psd_tol * max(1.0, B.lambda_max)


# ==================== СЛЕДЫ И НОРМЫ ====================
def _scalar(z) -> Union[float, complex]:
    z = complex(z)
    return z.real if z.imag == 0 else z


def trace(A: MatrixLike) -> Union[float, complex]:
    if isinstance(A, HermitianMatrix):
        return float(np.trace(A.entries).real)
    return _scalar(np.trace(np.asarray(A)))


def trace_norm(A: MatrixLike) -> float:
    if isinstance(A, PsdMatrix):
        return float(np.sum(A.spectrum.eigenvalues))
    a = as_array(A)
    if isinstance(A, HermitianMatrix) or np.allclose(a, a.conj().T, rtol=0, atol=0):
        return float(np.sum(np.abs(sla.eigvalsh(a))))
    return float(np.sum(sla.svdvals(a)))


def op_norm(A: MatrixLike) -> float:
    a = as_array(A)
    if a.size == 0:
        return 0.0
    return float(sla.svdvals(a)[0])


def hs_inner(A: MatrixLike, B: MatrixLike) -> Union[float, complex]:
    """⟨A, B⟩₂ = trace(B*·A)."""
    same_dims(A, B)
    return _scalar(np.vdot(as_array(B), as_array(A)))


def frobenius(A: MatrixLike) -> float:
    return float(np.linalg.norm(as_array(A), "fro"))
