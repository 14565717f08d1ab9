"""Нормальные функционалы f_T(A) = trace(A·T).

Порядок, сингулярность и разложение Лебега функционалов сводятся к тем же
вопросам для представляющих операторов. Критерий Крейна–фон Неймана
проверяется на явном семействе A_k = X·P_k/√f(P_k X*X P_k).
"""
from __future__ import annotations

import logging
import math
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from config import get_settings
from data.functionals import NormalFunctional
from data.matrices import HermitianMatrix, PsdMatrix, as_array, same_dims
from data.reports import LebesgueDecomposition, UniquenessCertificate
from data.sequences import L1Sequence
from data.tolerance import ToleranceConfig
from ell1_diagonal import diag_decompose, diag_is_dominated, diag_uniqueness, truncate_to_matrix
from errors import DegenerateFunctionalError, DimensionMismatchError, InternalConsistencyError, PreconditionError, ValidationError
from lebesgue_engine import ac_part_iterative, decompose, is_absolutely_continuous, uniqueness_certificate
from parallel_sum import is_singular_pair, nonzero_common_minorant
from psd_core import default_config, frobenius, loewner_leq, op_norm, trace, trace_norm

log = logging.getLogger("lebesgue.functionals")

PANEL_SIZE = 50
ADDITIVITY_TOL = 1e-9

Operand = Union[HermitianMatrix, np.ndarray]


class FunctionalLebesgue(NamedTuple):
    regular: NormalFunctional
    singular: NormalFunctional
    decomposition: Optional[LebesgueDecomposition] = None   # только для матриц, с трассой итераций


class AlmostDominationWitness(NamedTuple):
    almost_dominated: bool
    sequence: tuple[tuple[NormalFunctional, float], ...]   # (f_{S_n}, c_n), f_{S_n} ≤ c_n·f


def _check_compatible(f: NormalFunctional, g: NormalFunctional) -> None:
    if f.kind != g.kind:
        raise DimensionMismatchError(f"functional kinds differ: {f.kind} vs {g.kind}")
    if f.is_matrix:
        same_dims(f.rep, g.rep)


def _matrix_rep(f: NormalFunctional, dim: int) -> PsdMatrix:
    if f.is_matrix:
        return f.rep
    return truncate_to_matrix(f.rep, dim)


# ==================== ВЫЧИСЛЕНИЕ ====================
def evaluate(f: NormalFunctional, A: Operand) -> Union[float, complex]:
    """trace(A·T). Последовательность усекается до размера A."""
    a = as_array(A)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"functional argument must be square, got shape {a.shape}")
    if f.is_matrix:
        same_dims(a, f.rep)
        value = trace(a @ f.rep.entries)
    else:
        # диагональный оператор: trace(A·diag(x)) = Σ A_nn·x_n
        value = complex(np.sum(np.diagonal(a) * f.rep.values(a.shape[0])))
        value = value.real if value.imag == 0 else value
    if isinstance(A, HermitianMatrix):
        return float(np.real(value))
    return value


def functional_leq(f: NormalFunctional, g: NormalFunctional,
                   cfg: Optional[ToleranceConfig] = None) -> bool:
    _check_compatible(f, g)
    if f.is_matrix:
        return loewner_leq(f.rep, g.rep, default_config(cfg))
    return _sequence_leq(f.rep, g.rep)


def _sequence_leq(x: L1Sequence, y: L1Sequence) -> bool:
    # сравнение в логарифмах по исходным последовательностям: хвост после rebase может уйти в underflow
    H = max(x.N, y.N)
    if any(x.log_value(n) > y.log_value(n) for n in range(1, H + 1)):
        return False
    x_, y_ = x.rebase(H), y.rebase(H)
    if x_.tail is None:
        return True
    if y_.tail is None:
        return False
    # a_x·r_x^m ≤ a_y·r_y^m для всех m ≥ 1
    return x_.tail.r <= y_.tail.r and x.log_value(H + 1) <= y.log_value(H + 1)


# ==================== РАЗЛОЖЕНИЕ ЛЕБЕГА ====================
def _random_hermitian_panel(dim: int, count: int, seed: int, complex_: bool) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    panel = []
    for _ in range(count):
        a = rng.standard_normal((dim, dim))
        if complex_:
            a = a + 1j * rng.standard_normal((dim, dim))
        panel.append((a + a.conj().T) / 2)
    return panel


def _check_additivity(g: NormalFunctional, parts: FunctionalLebesgue, dim: int, seed: int) -> None:
    complex_ = g.is_matrix and not g.rep.is_real
    weight = trace_norm(g.rep) if g.is_matrix else g.rep.total()
    for A in _random_hermitian_panel(dim, PANEL_SIZE, seed, complex_):
        h = HermitianMatrix(A)
        lhs = evaluate(g, h)
        rhs = evaluate(parts.regular, h) + evaluate(parts.singular, h)
        # ‖A‖_F ≥ ‖A‖, этого достаточно для границы |f(A)| ≤ ‖A‖·‖T‖₁
        scale = max(1.0, frobenius(A) * weight)
        if abs(lhs - rhs) > ADDITIVITY_TOL * scale:
            raise InternalConsistencyError(
                f"g differs from g_r + g_s by {abs(lhs - rhs):.3e} on a test operator", g, parts
            )


def functional_lebesgue(g: NormalFunctional, f: NormalFunctional,
                        cfg: Optional[ToleranceConfig] = None,
                        seed: Optional[int] = None, truncate: Optional[int] = None) -> FunctionalLebesgue:
    """g = g_r + g_s: регулярная часть представлена [T]S, сингулярная S − [T]S.

    Для последовательностей аддитивность проверяется на операторах размера
    max(truncate, длины префиксов).
    """
    cfg = default_config(cfg)
    _check_compatible(g, f)
    settings = get_settings()
    seed = settings.seed if seed is None else seed

    decomposition = None
    if g.is_matrix:
        decomposition = decompose(g.rep, f.rep, cfg)
        regular, singular, dim = decomposition.ac, decomposition.sing, g.rep.dim
    else:
        d = diag_decompose(g.rep, f.rep)
        regular, singular = d.ac, d.sing
        dim = max(settings.truncate if truncate is None else truncate, g.rep.N, f.rep.N, 1)

    name = g.label or "g"
    parts = FunctionalLebesgue(
        regular=NormalFunctional(regular, f"{name}_r"),
        singular=NormalFunctional(singular, f"{name}_s"),
        decomposition=decomposition,
    )
    _check_additivity(g, parts, dim, seed)
    return parts


def functional_uniqueness(g: NormalFunctional, f: NormalFunctional,
                          cfg: Optional[ToleranceConfig] = None,
                          parts: Optional[FunctionalLebesgue] = None) -> UniquenessCertificate:
    """`parts` из functional_lebesgue избавляет от повторного разложения."""
    _check_compatible(g, f)
    if g.is_matrix:
        d = parts.decomposition if parts is not None else None
        return uniqueness_certificate(g.rep, f.rep, default_config(cfg), decomposition=d)
    unique, ratio = diag_uniqueness(g.rep, f.rep)
    if unique:
        return UniquenessCertificate(unique=True, c=ratio.c, ratio=ratio)
    bound, n = ratio.witnesses[-1]
    return UniquenessCertificate(
        unique=False,
        witness=f"regular part exceeds {bound:g} times f at index {n}",
        ratio=ratio,
    )


def functional_is_singular(f: NormalFunctional, g: NormalFunctional,
                           cfg: Optional[ToleranceConfig] = None) -> bool:
    """f ⊥ g ⇔ представляющие операторы взаимно сингулярны."""
    _check_compatible(f, g)
    if f.is_matrix:
        return is_singular_pair(f.rep, g.rep, default_config(cfg))
    x, y = f.rep, g.rep
    H = max(x.N, y.N)
    overlap = any(x.log_value(n) > -math.inf and y.log_value(n) > -math.inf for n in range(1, H + 1))
    return not overlap and not (x.tail is not None and y.tail is not None)


def functional_common_minorant(f: NormalFunctional, g: NormalFunctional,
                               cfg: Optional[ToleranceConfig] = None) -> Optional[NormalFunctional]:
    """Ненулевой h ≤ f, h ≤ g (через параллельную сумму), либо None."""
    _check_compatible(f, g)
    if not f.is_matrix:
        raise PreconditionError("common minorants are computed for matrix functionals only")
    R = nonzero_common_minorant(f.rep, g.rep, default_config(cfg))
    return None if R is None else NormalFunctional(R, "h")


def almost_domination_witness(g: NormalFunctional, f: NormalFunctional,
                              cfg: Optional[ToleranceConfig] = None,
                              horizons: Optional[Sequence[int]] = None) -> AlmostDominationWitness:
    """Монотонная последовательность f_{S_n} ≤ c_n·f, сходящаяся к g_r."""
    cfg = default_config(cfg)
    _check_compatible(g, f)
    if g.is_matrix:
        _, it_trace = ac_part_iterative(g.rep, f.rep, cfg)
        seq = tuple((NormalFunctional(s.approximant, f"S_{s.n}"), s.c_bound) for s in it_trace.steps)
        return AlmostDominationWitness(is_absolutely_continuous(g.rep, f.rep, cfg), seq)

    regular = diag_decompose(g.rep, f.rep).ac
    if horizons is None:
        top = max(get_settings().truncate, 1)
        horizons = [2 ** j for j in range(int(math.log2(top)) + 1)]
    seq = []
    for n in horizons:
        cut = L1Sequence(tuple(regular.values(n)), None)
        c = diag_is_dominated(cut, f.rep)
        if c is None:
            raise InternalConsistencyError(f"truncated regular part is not dominated at n={n}", cut, f.rep)
        seq.append((NormalFunctional(cut, f"S_{n}"), c))
    almost = diag_decompose(g.rep, f.rep).sing.total() == 0.0
    return AlmostDominationWitness(almost, tuple(seq))


# ==================== КРИТЕРИЙ КРЕЙНА–ФОН НЕЙМАНА ====================
def _validated_ranks(rank_schedule: Optional[Sequence[int]], dim: int) -> list[int]:
    ranks = list(range(1, dim + 1)) if rank_schedule is None else [int(k) for k in rank_schedule]
    if any(k < 1 or k > dim for k in ranks):
        raise ValidationError(f"ranks must lie in 1..{dim}, got {ranks}", "rank")
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ValidationError(f"rank schedule must be strictly increasing, got {ranks}", "rank")
    return ranks


def kvn_sup_estimate(f: NormalFunctional, X: Operand,
                     rank_schedule: Optional[Sequence[int]] = None,
                     cfg: Optional[ToleranceConfig] = None) -> list[float]:
    """|f(X*·A_k)|² на семействе A_k = X·P_k/√f(P_k X*X P_k), P_k: верхние k собственных векторов."""
    cfg = default_config(cfg)
    x = as_array(X)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionMismatchError(f"X must be square, got shape {x.shape}")
    dim = x.shape[0]
    T = _matrix_rep(f, dim)
    same_dims(x, T)
    if trace(T) <= 0:
        raise DegenerateFunctionalError("Krein-von Neumann estimate needs a nonzero functional")

    V = T.spectrum.eigenvectors
    XtX = x.conj().T @ x
    floor = cfg.rank_cutoff * op_norm(x) ** 2 * trace(T)
    out: list[float] = []
    for k in _validated_ranks(rank_schedule, dim):
        P = V[:, :k] @ V[:, :k].conj().T
        norm = float(np.real(evaluate(f, P @ XtX @ P)))
        if norm <= floor:
            out.append(0.0)
            continue
        A = x @ P / math.sqrt(norm)
        out.append(float(abs(evaluate(f, x.conj().T @ A)) ** 2))
    log.debug("[functionals] kvn estimates %s", out)
    return out


def kvn_lower_bound(f: NormalFunctional, rank_schedule: Optional[Sequence[int]] = None,
                    dim: Optional[int] = None) -> list[float]:
    """trace(P_k·T)²/trace(T) для A = P_k/√trace(T): допустимо, растёт до trace(T)."""
    if dim is None:
        dim = f.rep.dim if f.is_matrix else get_settings().truncate
    T = _matrix_rep(f, dim)
    total = trace(T)
    if total <= 0:
        raise DegenerateFunctionalError("projection bound needs a nonzero functional")
    eig = T.spectrum.eigenvalues
    return [math.fsum(eig[:k]) ** 2 / total for k in _validated_ranks(rank_schedule, dim)]


def normality_gap(f: NormalFunctional, cfg: Optional[ToleranceConfig] = None) -> float:
    """f(I) − sup|f(A)|² по семейству на полном ранге; для матричных функционалов ≈ 0."""
    if not f.is_matrix:
        raise PreconditionError("normality gap is defined for matrix functionals")
    dim = f.rep.dim
    eye = np.eye(dim)
    full = kvn_sup_estimate(f, eye, [dim], cfg)[-1]
    return float(evaluate(f, HermitianMatrix(eye))) - full


def positivity_witness(T: PsdMatrix, vectors: Sequence[np.ndarray]) -> list[tuple[float, float]]:
    """Пары (⟨Te, e⟩, f_T(P_e)) для единичных e; совпадают и неотрицательны."""
    f = NormalFunctional(T)
    out = []
    for v in vectors:
        e = np.asarray(v, dtype=np.result_type(v, T.entries, np.float64))
        norm = float(np.linalg.norm(e))
        if e.shape != (T.dim,) or norm == 0:
            raise ValidationError(f"witness vector must be a nonzero vector of length {T.dim}", "vector")
        e = e / norm
        P = np.outer(e, e.conj())
        quad = float(np.real(np.vdot(e, T.entries @ e)))
        out.append((quad, float(np.real(evaluate(f, P)))))
    return out
