"""Параллельная сумма S:T = S·(S+T)†·T и критерий взаимной сингулярности."""
from __future__ import annotations

import logging
from typing import Optional

from data.matrices import PsdMatrix, same_dims
from data.tolerance import ToleranceConfig
from errors import InternalConsistencyError
from psd_core import default_config, pinv_psd, range_projection, rank, trace

log = logging.getLogger("lebesgue.psd")


def parallel_sum(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> PsdMatrix:
    # На общем образе совпадает с вариационным определением параллельной суммы
    cfg = default_config(cfg)
    same_dims(S, T)
    total = PsdMatrix.of(S.entries + T.entries, psd_tol=cfg.psd_tol)
    product = S.entries @ pinv_psd(total, cfg).entries @ T.entries
    return PsdMatrix.of(product, psd_tol=cfg.psd_tol)


def _common_dim(S: PsdMatrix, T: PsdMatrix, cfg: ToleranceConfig, threshold: float) -> int:
    """dim(ran S ∩ ran T), собственные значения ≤ threshold считаются нулём."""
    scale = threshold / cfg.rank_cutoff
    P_s = range_projection(S, cfg, scale=scale)
    P_t = range_projection(T, cfg, scale=scale)
    joint = range_projection(PsdMatrix.of(P_s.entries + P_t.entries), cfg)
    return rank(P_s, cfg) + rank(P_t, cfg) - rank(joint, cfg)


def is_singular_pair(S: PsdMatrix, T: PsdMatrix, cfg: Optional[ToleranceConfig] = None) -> bool:
    """S ⊥ T: след параллельной суммы исчезает; сверяется с dim(ran S ∩ ran T) = 0.

    Ответ даёт порог по следу. Пересечение образов считается дважды: при
    строгом пороге rank_cutoff·max(1, λ_max) и при грубом, соизмеримом с
    conv_tol. Собственные значения между порогами двусмысленны; ошибкой
    считается только расхождение с обоими.
    """
    cfg = default_config(cfg)
    same_dims(S, T)
    tr_s, tr_t = trace(S), trace(T)
    trace_scale = max(1.0, tr_s, tr_t)
    ps_trace = trace(parallel_sum(S, T, cfg))
    by_trace = ps_trace <= cfg.conv_tol * trace_scale

    strict = _common_dim(S, T, cfg, cfg.rank_cutoff * max(1.0, S.lambda_max, T.lambda_max))
    loose = _common_dim(S, T, cfg, 4.0 * cfg.conv_tol * trace_scale)
    if (by_trace and loose > 0) or (not by_trace and strict == 0):
        raise InternalConsistencyError(
            f"singularity criteria disagree: trace(S:T)={ps_trace:.3e} "
            f"but dim(ran S ∩ ran T)={strict} (strict) / {loose} (loose); check rank_cutoff/conv_tol",
            S, T,
        )
    log.debug("[parallel] trace(S:T)=%.3e common=%d/%d", ps_trace, strict, loose)
    return by_trace


def nonzero_common_minorant(S: PsdMatrix, T: PsdMatrix,
                            cfg: Optional[ToleranceConfig] = None) -> Optional[PsdMatrix]:
    """Свидетель R ≠ 0 с R ≤ S и R ≤ T, либо None для сингулярной пары."""
    cfg = default_config(cfg)
    if is_singular_pair(S, T, cfg):
        return None
    return parallel_sum(S, T, cfg)
