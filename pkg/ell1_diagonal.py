"""Диагональная модель следового класса на последовательностях из ℓ¹.

Здесь представим бесконечный ранг: разложение по носителям, доминирование
через отношения x_n/y_n, конструктивная последовательность с неограниченным
отношением и контрпример к единственности разложения.
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

from config import get_settings
from data.matrices import PsdMatrix
from data.sequences import GeometricTail, L1Sequence, RatioCertificate
from errors import FiniteRankError, InternalConsistencyError, PreconditionError, ValidationError

log = logging.getLogger("lebesgue.ell1")

DEFAULT_BOUNDS: tuple[float, ...] = tuple(10.0 ** j for j in range(7))
UNDERFLOW_FLOOR = 1e-280
SUM_TOL = 1e-12


class DiagDecomposition(NamedTuple):
    ac: L1Sequence
    sing: L1Sequence


class DiagUniqueness(NamedTuple):
    unique: bool
    certificate: RatioCertificate


class TheoremBInstance(NamedTuple):
    T: L1Sequence
    S: L1Sequence
    certificate: RatioCertificate


def _align(S: L1Sequence, T: L1Sequence) -> tuple[L1Sequence, L1Sequence, int]:
    """Общий горизонт H = max(N_S, N_T): дальше у обеих только хвосты."""
    H = max(S.N, T.N)
    return S.rebase(H), T.rebase(H), H


def _positive(x: L1Sequence, n: int) -> bool:
    # по логарифму: материализованный хвост может уйти в underflow
    return x.log_value(n) > -math.inf


# ==================== РАЗЛОЖЕНИЕ ПО НОСИТЕЛЯМ ====================
def diag_decompose(S: L1Sequence, T: L1Sequence) -> DiagDecomposition:
    base, _, H = _align(S, T)
    ac_prefix, sing_prefix = [], []
    for n, s in enumerate(base.prefix, start=1):
        if _positive(T, n):
            ac_prefix.append(s)
            sing_prefix.append(0.0)
        else:
            ac_prefix.append(0.0)
            sing_prefix.append(s)

    # хвост T ненулевой ⇒ хвост S целиком абсолютно непрерывен
    ac_tail = base.tail if T.tail is not None else None
    sing_tail = base.tail if T.tail is None else None
    return DiagDecomposition(
        ac=L1Sequence(tuple(ac_prefix), ac_tail),
        sing=L1Sequence(tuple(sing_prefix), sing_tail),
    )


# ==================== ОТНОШЕНИЯ ====================
def _ratio_at(S: L1Sequence, T: L1Sequence, n: int, log_ratio: float) -> float:
    s, t = S.value(n), T.value(n)
    if s > 0 and t > 0:
        return s / t
    return math.exp(log_ratio)


def _sup_ratio(S: L1Sequence, T: L1Sequence) -> Optional[tuple[float, int]]:
    """(sup S_n/T_n, индекс, где он достигается) либо None, если sup = ∞."""
    S_, T_, H = _align(S, T)
    best, at = -math.inf, 1
    for n in range(1, H + 1):
        if not _positive(S, n):
            continue
        if not _positive(T, n):
            return None
        lr = S.log_value(n) - T.log_value(n)
        if lr > best:
            best, at = lr, n
    if S_.tail is not None:
        if T_.tail is None or S_.tail.r > T_.tail.r:
            return None
        # отношение хвостов геометрическое с множителем r_S/r_T ≤ 1: максимум на первом члене
        first = S.log_value(H + 1) - T.log_value(H + 1)
        if first > best:
            best, at = first, H + 1
    if best == -math.inf:
        return 0.0, at
    return _ratio_at(S, T, at, best), at


def diag_is_dominated(S: L1Sequence, T: L1Sequence) -> Optional[float]:
    """Наименьшее c с S_n ≤ c·T_n для всех n, либо None."""
    found = _sup_ratio(S, T)
    return None if found is None else found[0]


def verify_ratio_witness(S: L1Sequence, T: L1Sequence, n: int, bound: float) -> bool:
    """S_n/T_n ≥ bound, считается в логарифмах."""
    log_s, log_t = S.log_value(n), T.log_value(n)
    if log_s == -math.inf:
        return False
    if log_t == -math.inf:
        return True
    return log_s - log_t >= math.log(bound) - 1e-12 * max(1.0, abs(log_s))


def diag_ratio_witness(S: L1Sequence, T: L1Sequence, bound: float) -> Optional[int]:
    """Наименьший индекс n с S_n/T_n ≥ bound, либо None, если такого нет."""
    if not bound > 0:
        raise ValidationError(f"ratio bound must be positive, got {bound!r}", "bound")
    S_, T_, H = _align(S, T)
    for n in range(1, H + 1):
        if verify_ratio_witness(S, T, n, bound):
            return n
    if S_.tail is None:
        return None
    if T_.tail is None:
        return H + 1
    if verify_ratio_witness(S, T, H + 1, bound):
        return H + 1
    r_s, r_t = S_.tail.r, T_.tail.r
    if r_s <= r_t:
        return None
    # a_S·r_S^m / (a_T·r_T^m) ≥ B
    need = math.log(bound) + T_.tail.log_a - S_.tail.log_a
    m = max(1, math.ceil(need / math.log(r_s / r_t)))
    while m > 1 and verify_ratio_witness(S, T, H + m - 1, bound):
        m -= 1
    while not verify_ratio_witness(S, T, H + m, bound):
        m += 1
    return H + m


def _unbounded_certificate(S: L1Sequence, T: L1Sequence,
                           bounds: Sequence[float]) -> RatioCertificate:
    witnesses = []
    for b in bounds:
        n = diag_ratio_witness(S, T, b)
        if n is None:
            raise InternalConsistencyError(f"ratio declared unbounded but no index reaches {b:g}", S, T)
        witnesses.append((float(b), n))
    return RatioCertificate("unbounded", witnesses=tuple(witnesses))


def verify_ratio_certificate(S: L1Sequence, T: L1Sequence, certificate: RatioCertificate) -> bool:
    if certificate.bounded:
        c = diag_is_dominated(S, T)
        return c is not None and math.isclose(c, certificate.c, rel_tol=1e-12, abs_tol=0.0)
    return all(verify_ratio_witness(S, T, n, b) for b, n in certificate.witnesses)


def diag_uniqueness(S: L1Sequence, T: L1Sequence,
                    bounds: Sequence[float] = DEFAULT_BOUNDS) -> DiagUniqueness:
    """Единственность ⇔ ac-часть S доминируется T."""
    ac = diag_decompose(S, T).ac
    found = _sup_ratio(ac, T)
    if found is not None:
        c, at = found
        return DiagUniqueness(True, RatioCertificate("bounded", c=c, index=at))
    return DiagUniqueness(False, _unbounded_certificate(ac, T, bounds))


# ==================== КОНСТРУКЦИЯ С НЕОГРАНИЧЕННЫМ ОТНОШЕНИЕМ ====================
def _effective_horizon(lam: L1Sequence, horizon: int) -> int:
    """Последний индекс, где λ_n·2^{-n} ещё не ниже UNDERFLOW_FLOOR (но не меньше N)."""
    floor = math.log(UNDERFLOW_FLOOR)
    log2 = math.log(2.0)
    last = 0
    for n in range(1, horizon + 1):
        lv = lam.log_value(n)
        if lv == -math.inf:
            continue
        if lv - n * log2 >= floor:
            last = n
        elif n > lam.N:
            break
    return max(last, lam.N, 1)


def _sum_check(mu: L1Sequence) -> None:
    total = mu.total()
    count = mu.N
    if mu.tail is not None and total > 0:
        # хватит членов, чтобы остаток хвоста был ниже допуска
        log_rest = math.log(SUM_TOL * 0.1 * total * (1.0 - mu.tail.r)) - mu.tail.log_a
        if log_rest < 0.0:
            count += max(0, math.ceil(log_rest / math.log(mu.tail.r)))
    numeric = mu.partial_sum(count)
    if abs(total - numeric) > SUM_TOL * total:
        raise InternalConsistencyError(
            f"closed-form sum {total!r} and partial sum {numeric!r} differ beyond {SUM_TOL:g}", mu
        )


def construct_unbounded_ratio(lam: L1Sequence, horizon: Optional[int] = None,
                              bounds: Sequence[float] = DEFAULT_BOUNDS) -> tuple[L1Sequence, RatioCertificate]:
    """μ ∈ ℓ¹ с тем же носителем, что и λ, и неограниченным μ_n/λ_n.

    Индексы n_k выбираются жадно (λ_{n_k} ≤ 2^{-k}, n_k строго растут), там
    μ = k·λ; иначе μ_n = λ_n·2^{-n}. Префикс материализуется до эффективного
    горизонта, дальше хвост с отношением √r_λ, которое больше r_λ.
    """
    if lam.tail is None:
        raise FiniteRankError(
            "sequence has finite support: an operator of finite rank always has a unique "
            "Lebesgue decomposition, so no counterexample exists"
        )
    if horizon is None:
        horizon = get_settings().horizon
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}", "horizon")

    H = _effective_horizon(lam, horizon)
    base = lam.rebase(H)
    values = base.values(H)
    mu_prefix = np.zeros(H)
    k = 1
    overrides = 0
    for i, v in enumerate(values):
        n = i + 1
        if v <= 0:
            continue
        if v <= 2.0 ** -k:
            mu_prefix[i] = k * v
            k += 1
            overrides += 1
        else:
            # подрезка снизу, чтобы носитель не терялся в underflow
            mu_prefix[i] = max(math.exp(math.log(v) - n * math.log(2.0)), min(v, UNDERFLOW_FLOOR))

    log_a = base.tail.log_a
    tail = GeometricTail.from_log(max(log_a - H * math.log(2.0), min(log_a, math.log(UNDERFLOW_FLOOR))),
                                  math.sqrt(base.tail.r))
    mu = L1Sequence(tuple(mu_prefix), tail)
    log.info("[ell1] constructed sequence: horizon %d, %d overrides, sum %.12g", H, overrides, mu.total())

    for n in range(1, H + 1):
        if (values[n - 1] > 0) != (mu_prefix[n - 1] > 0):
            raise InternalConsistencyError(f"support of constructed sequence differs at index {n}", mu, lam)
    _sum_check(mu)
    certificate = _unbounded_certificate(mu, lam, bounds)
    if not verify_ratio_certificate(mu, lam, certificate):
        raise InternalConsistencyError("ratio certificate failed verification", certificate)
    return mu, certificate


def theorem_b_instance(lam: L1Sequence, horizon: Optional[int] = None) -> TheoremBInstance:
    """Пара (T = λ, S = μ): S абсолютно непрерывна относительно T, но не доминируется ею."""
    mu, certificate = construct_unbounded_ratio(lam, horizon)
    d = diag_decompose(mu, lam)
    if d.sing.total() != 0.0:
        raise InternalConsistencyError("constructed S has a singular part with respect to T", d.sing)
    if diag_is_dominated(mu, lam) is not None:
        raise InternalConsistencyError("constructed S is dominated by T", mu, lam)
    return TheoremBInstance(T=lam, S=mu, certificate=certificate)


# ==================== МОСТ К МАТРИЦАМ ====================
def truncate_to_matrix(x: L1Sequence, N: int) -> PsdMatrix:
    if N < 1:
        raise PreconditionError(f"truncation size must be >= 1, got {N}")
    return PsdMatrix.diag(x.values(N))
