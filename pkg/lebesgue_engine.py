"""Разложение Лебега–Андо S = [T]S + (S − [T]S).

[T]S считается двумя независимыми путями: как предел монотонных
приближений (2^k·T):S и в замкнутой форме √S·P_M·√S. decompose требует их
совпадения, затем проверяет сертификаты.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from data.matrices import PsdMatrix, same_dims
from data.reports import IterationStep, IterationTrace, LebesgueDecomposition, UniquenessCertificate
from data.tolerance import ToleranceConfig
from errors import ConvergenceError, InternalConsistencyError, PreconditionError
from parallel_sum import is_singular_pair
from psd_core import (
    default_config,
    loewner_leq,
    op_norm,
    pinv_hermitian,
    range_included,
    range_projection,
    sqrt_psd,
    trace,
    trace_norm,
)

log = logging.getLogger("lebesgue.engine")

SCHEDULES = ("parallel", "spectral")
ORACLE_TOL = 1e-8
ADDITIVITY_TOL = 1e-9


# ==================== S В СОБСТВЕННОМ БАЗИСЕ T ====================
@dataclass(frozen=True, eq=False)
class _Blocks:
    """W*·S·W для W = [U_r | U_k]: U_r значимые собственные векторы T (значения D), U_k дополнение.

    Обобщённые обратные блоков обрезаются на `cut` = rank_cutoff²·λ_max(S):
    по сингулярным числам √S это тот же порог, что и у замкнутой формы.
    """

    U_r: np.ndarray
    D: np.ndarray
    U_k: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    cut: float

    @property
    def dim(self) -> int:
        return self.U_r.shape[0]

    def parallel(self, n: float) -> np.ndarray:
        """(n·T):S = S − S·(S + n·T)^-·S, обобщённая обратная через дополнение Шура."""
        if self.D.size == 0:
            return np.zeros((self.dim, self.dim), dtype=self.a11.dtype)
        M = self.a11 + n * np.diag(self.D)
        if self.U_k.shape[1] == 0:
            M_inv = sla.solve(M, np.eye(self.D.size), assume_a="pos")
            return self.U_r @ (self.a11 - self.a11 @ M_inv @ self.a11) @ self.U_r.conj().T
        a21 = self.a12.conj().T
        MA = sla.solve(M, self.a12, assume_a="pos")          # M^{-1}·A12
        M_inv = sla.solve(M, np.eye(self.D.size), assume_a="pos")
        C_p = pinv_hermitian(self.a22 - a21 @ MA, self.cut)
        G12 = -MA @ C_p
        G = np.block([[M_inv + MA @ C_p @ MA.conj().T, G12], [G12.conj().T, C_p]])
        A = np.block([[self.a11, self.a12], [a21, self.a22]])
        W = np.hstack([self.U_r, self.U_k])
        return W @ (A - A @ G @ A) @ W.conj().T

    def c_bound(self, approx: np.ndarray) -> float:
        """Наименьшее c с approx ≤ c·T на ran T."""
        if self.D.size == 0:
            return 0.0
        half = self.U_r / np.sqrt(self.D)
        X = half.conj().T @ approx @ half
        return max(0.0, float(sla.eigvalsh((X + X.conj().T) / 2)[-1]))

    def shorted(self) -> np.ndarray:
        """Предел (n·T):S в координатах U_r: K = A11 − A12·A22^-·A21."""
        if self.U_k.shape[1] == 0:
            return self.a11
        return self.a11 - self.a12 @ pinv_hermitian(self.a22, self.cut) @ self.a12.conj().T


def _blocks(S: PsdMatrix, T: PsdMatrix, cfg: ToleranceConfig) -> _Blocks:
    t_lam, U = T.spectrum.eigenvalues, T.spectrum.eigenvectors
    keep = t_lam > cfg.rank_cutoff * T.lambda_max
    U_r, U_k = U[:, keep], U[:, ~keep]
    s = S.entries
    return _Blocks(
        U_r=U_r, D=t_lam[keep], U_k=U_k,
        a11=U_r.conj().T @ s @ U_r,
        a12=U_r.conj().T @ s @ U_k,
        a22=U_k.conj().T @ s @ U_k,
        cut=cfg.rank_cutoff ** 2 * S.lambda_max,
    )


# ==================== ОТНОСИТЕЛЬНЫЙ СПЕКТР ====================
@dataclass(frozen=True, eq=False)
class _RelativeSpectrum:
    """[T]S = G·G*, столбцы G в ran T; ω: собственные значения T^{-1/2}·[T]S·T^{-1/2}."""

    G: np.ndarray
    omega: np.ndarray

    @property
    def omega_max(self) -> float:
        return float(self.omega.max()) if self.omega.size else 0.0

    def assemble(self, weights: np.ndarray) -> np.ndarray:
        return (self.G * weights) @ self.G.conj().T


def _relative_spectrum(blocks: _Blocks) -> _RelativeSpectrum:
    if blocks.D.size == 0:
        return _RelativeSpectrum(np.zeros((blocks.dim, 0), dtype=blocks.a11.dtype), np.zeros(0))
    root_d = np.sqrt(blocks.D)
    K = blocks.shorted()
    X = K / root_d[:, None] / root_d[None, :]
    omega, Q = sla.eigh((X + X.conj().T) / 2)
    omega = np.clip(omega, 0.0, None)
    G = blocks.U_r @ (root_d[:, None] * Q) * np.sqrt(omega)
    return _RelativeSpectrum(G, omega)


# ==================== ИТЕРАЦИОННЫЙ ОРАКУЛ ====================
def ac_part_iterative(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None,
                      schedule: str = "parallel") -> tuple[PsdMatrix, IterationTrace]:
    """Предел монотонных приближений S_k = (2^k·T):S, k = 0..max_iters.

    Остановка, когда ‖S_{k+1} − S_k‖₁ < conv_tol·max(1, trace S). Расписание
    `spectral` даёт частичные суммы по относительному спектру и сходится за
    конечное число шагов.
    """
    cfg = default_config(cfg)
    same_dims(S, T)
    if schedule not in SCHEDULES:
        raise PreconditionError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")

    blocks = _blocks(S, T, cfg)
    rel = _relative_spectrum(blocks) if schedule == "spectral" else None
    tol = cfg.conv_tol * max(1.0, trace(S))

    def approximant(k: int) -> tuple[PsdMatrix, float]:
        n = 2 ** k
        if rel is None:
            a = blocks.parallel(float(n))
            return PsdMatrix.of(a, psd_tol=cfg.psd_tol), blocks.c_bound(a)
        keep = rel.omega <= n * (1.0 + cfg.conv_tol)
        c = float(rel.omega[keep].max()) if keep.any() else 0.0
        return PsdMatrix.of(rel.assemble(keep.astype(np.float64)), psd_tol=cfg.psd_tol), c

    steps: list[IterationStep] = []
    current, c_now = approximant(0)
    for k in range(cfg.max_iters + 1):
        nxt, c_next = approximant(k + 1)
        if not (loewner_leq(current, nxt, cfg) and loewner_leq(current, S, cfg)):
            raise InternalConsistencyError(f"approximants lost monotonicity at k={k}", current, nxt)
        gap = _hermitian_trace_norm(nxt.entries - current.entries)
        steps.append(IterationStep(k=k, n=2 ** k, approximant=current, trace=trace(current),
                                   gap=gap, c_bound=c_now))
        log.debug("[engine] %s k=%d gap=%.3e c=%.6g", schedule, k, gap, c_now)

        if rel is None:
            done = gap < tol
        else:
            done = 2 ** k * (1.0 + cfg.conv_tol) >= rel.omega_max
        if done:
            trace_ = IterationTrace(tuple(steps), converged=True, schedule=schedule)
            log.info("[engine] %s schedule converged at k=%d", schedule, k)
            return (nxt if rel is None else current), trace_
        current, c_now = nxt, c_next

    trace_ = IterationTrace(tuple(steps), converged=False, schedule=schedule)
    raise ConvergenceError(
        f"no convergence after {cfg.max_iters} iterations (last gap {steps[-1].gap:.3e}, "
        f"target {tol:.3e})",
        trace_,
    )


def _hermitian_trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.abs(sla.eigvalsh((a + a.conj().T) / 2))))


# ==================== ЗАМКНУТАЯ ФОРМА ====================
def _null_columns(M: np.ndarray, columns: int, threshold: float) -> np.ndarray:
    """Ортонормированный базис ker M (сингулярные числа ≤ threshold считаются нулём)."""
    _, sig, Vh = sla.svd(M, full_matrices=True)
    padded = np.zeros(columns)
    padded[: sig.size] = sig
    return Vh.conj().T[:, padded <= threshold]


def ac_part_closed(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> PsdMatrix:
    """√S·P_M·√S, где M = ker((I − P_T)·√S)."""
    cfg = default_config(cfg)
    dim = same_dims(S, T)
    root = sqrt_psd(S).entries
    P_t = range_projection(T, cfg).entries
    outside = root - P_t @ root
    Z = _null_columns(outside, dim, cfg.rank_cutoff * op_norm(root))
    P_m = Z @ Z.conj().T
    return PsdMatrix.of(root @ P_m @ root, psd_tol=cfg.psd_tol)


# ==================== РАЗЛОЖЕНИЕ ====================
def decompose(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> LebesgueDecomposition:
    cfg = default_config(cfg)
    same_dims(S, T)

    if cfg.parallel_oracles:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_iter = pool.submit(ac_part_iterative, S, T, cfg)
            fut_closed = pool.submit(ac_part_closed, S, T, cfg)
            (ac_iter, it_trace), ac = fut_iter.result(), fut_closed.result()
    else:
        ac_iter, it_trace = ac_part_iterative(S, T, cfg)
        ac = ac_part_closed(S, T, cfg)

    scale = max(1.0, trace_norm(S))
    disagreement = _hermitian_trace_norm(ac_iter.entries - ac.entries)
    if disagreement > ORACLE_TOL * scale:
        raise InternalConsistencyError(
            f"iterative and closed-form [T]S disagree by {disagreement:.3e} (trace norm)", ac_iter, ac
        )

    sing = PsdMatrix.of(S.entries - ac.entries, psd_tol=cfg.psd_tol)
    residual = _hermitian_trace_norm(ac.entries + sing.entries - S.entries)
    if residual > ADDITIVITY_TOL * scale:
        raise InternalConsistencyError(f"ac + sing misses S by {residual:.3e}", ac, sing)
    if not is_singular_pair(sing, T, cfg):
        raise InternalConsistencyError("remainder S − [T]S is not singular to T", sing, T)
    if not range_included(ac, T, cfg, scale=S.lambda_max):
        raise InternalConsistencyError("range of [T]S leaves range of T", ac, T)
    return LebesgueDecomposition(ac=ac, sing=sing, trace_of_iteration=it_trace)


def is_dominated(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None,
                 scale: Optional[float] = None) -> Optional[float]:
    """Наименьшее c с S ≤ c·T, либо None, если ran S ⊄ ran T (`scale` как в range_included)."""
    cfg = default_config(cfg)
    same_dims(S, T)
    if not range_included(S, T, cfg, scale=scale):
        return None
    t_lam, U = T.spectrum.eigenvalues, T.spectrum.eigenvectors
    keep = t_lam > cfg.rank_cutoff * T.lambda_max
    if not keep.any():
        return 0.0
    # √(T†) ограниченный на ran T
    half = U[:, keep] / np.sqrt(t_lam[keep])
    M = half.conj().T @ S.entries @ half
    c = max(0.0, float(sla.eigvalsh((M + M.conj().T) / 2)[-1]))
    cT = PsdMatrix.of(c * T.entries, psd_tol=cfg.psd_tol)
    if not loewner_leq(S, cT, cfg):
        raise InternalConsistencyError(f"S ≤ {c:.6g}·T fails after range inclusion passed", S, T)
    return c


def is_absolutely_continuous(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> bool:
    # в конечной размерности почти доминирование = включение образов; проверяем, а не предполагаем
    cfg = default_config(cfg)
    d = decompose(S, T, cfg)
    by_decomposition = trace_norm(d.sing) <= cfg.rank_cutoff * S.lambda_max
    by_range = range_included(S, T, cfg)
    if by_decomposition != by_range:
        raise InternalConsistencyError(
            f"absolute continuity criteria disagree (singular part {trace_norm(d.sing):.3e}, "
            f"range inclusion {by_range})",
            d, T,
        )
    return by_decomposition


def uniqueness_certificate(S: PsdMatrix, T: PsdMatrix,
                           cfg: Optional[ToleranceConfig] = None,
                           decomposition: Optional[LebesgueDecomposition] = None) -> UniquenessCertificate:
    """Единственность ⇔ [T]S ≤ c·T; в матричной модели всегда так, но проверяем."""
    cfg = default_config(cfg)
    d = decomposition if decomposition is not None else decompose(S, T, cfg)
    c = is_dominated(d.ac, T, cfg, scale=S.lambda_max)
    if c is None:
        return UniquenessCertificate(unique=False, witness="range of [T]S is not contained in range of T")
    return UniquenessCertificate(unique=True, c=c)


def extremality_check(R: PsdMatrix, S: PsdMatrix, T: PsdMatrix,
                      cfg: Optional[ToleranceConfig] = None) -> bool:
    """R ≪ T и R ≤ S ⇒ R ≤ [T]S. False означает ошибку в движке, а не ответ."""
    cfg = default_config(cfg)
    same_dims(R, S, T)
    if not loewner_leq(R, S, cfg):
        raise PreconditionError("extremality check needs R <= S")
    if not is_absolutely_continuous(R, T, cfg):
        raise PreconditionError("extremality check needs R absolutely continuous with respect to T")
    ok = loewner_leq(R, decompose(S, T, cfg).ac, cfg)
    if not ok:
        log.warning("[engine] extremality violated: R is not below [T]S")
    return ok
