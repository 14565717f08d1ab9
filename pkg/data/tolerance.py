from __future__ import annotations

from dataclasses import dataclass, replace

from config import get_settings
from errors import ConfigError


@dataclass(frozen=True)
class ToleranceConfig:
    """Все допуски в одном месте."""

    psd_tol: float = 1e-10
    rank_cutoff: float = 1e-10
    conv_tol: float = 1e-9
    max_iters: int = 60
    parallel_oracles: bool = False

    def __post_init__(self):
        for name in ("psd_tol", "rank_cutoff", "conv_tol"):
            value = getattr(self, name)
            if not value > 0:
                raise ConfigError(f"{name} must be strictly positive, got {value!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError(f"max_iters must be an integer >= 1, got {self.max_iters!r}")

    @classmethod
    def from_settings(cls) -> "ToleranceConfig":
        s = get_settings()
        return cls(psd_tol=s.psd_tol, rank_cutoff=s.rank_cutoff,
                   conv_tol=s.conv_tol, max_iters=s.max_iters, parallel_oracles=s.parallel_oracles)

    def with_overrides(self, **kw) -> "ToleranceConfig":
        # None означает «флаг не задан»
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def as_dict(self) -> dict:
        return {
            "psd_tol": self.psd_tol,
            "rank_cutoff": self.rank_cutoff,
            "conv_tol": self.conv_tol,
            "max_iters": self.max_iters,
            "parallel_oracles": self.parallel_oracles,
        }
