from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

# ==================== НАСТРОЙКИ ИЗ ОКРУЖЕНИЯ ====================
# .env читается один раз при первом обращении к get_settings(), не на импорте.


@dataclass(frozen=True)
class Settings:
    psd_tol: float
    rank_cutoff: float
    conv_tol: float
    max_iters: int
    truncate: int
    horizon: int
    seed: int
    log_level: str
    parallel_oracles: bool


_SETTINGS: Optional[Settings] = None


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    return float(raw) if raw not in (None, "") else default


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw not in (None, "") else default


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes")


def get_settings() -> Settings:
    global _SETTINGS
    if _SETTINGS is None:
        load_dotenv()
        _SETTINGS = Settings(
            psd_tol=_env_float("LEBESGUE_PSD_TOL", 1e-10),
            rank_cutoff=_env_float("LEBESGUE_RANK_CUTOFF", 1e-10),
            conv_tol=_env_float("LEBESGUE_CONV_TOL", 1e-9),
            max_iters=_env_int("LEBESGUE_MAX_ITERS", 60),
            truncate=_env_int("LEBESGUE_TRUNCATE", 32),
            horizon=_env_int("LEBESGUE_HORIZON", 10_000),
            seed=_env_int("LEBESGUE_SEED", 0),
            log_level=os.environ.get("LEBESGUE_LOG_LEVEL", "WARNING").upper(),
            parallel_oracles=_env_flag("LEBESGUE_PARALLEL_ORACLES"),
        )
    return _SETTINGS


def reset_settings() -> None:
    """Сбросить кэш (нужно тестам, которые подменяют окружение)."""
    global _SETTINGS
    _SETTINGS = None
