from __future__ import annotations

import numpy as np
import pytest

from config import reset_settings
from data.matrices import PsdMatrix
from data.sequences import GeometricTail, L1Sequence
from data.tolerance import ToleranceConfig

PANEL_SEED = 20240301


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    for name in ("LEBESGUE_PSD_TOL", "LEBESGUE_RANK_CUTOFF", "LEBESGUE_CONV_TOL", "LEBESGUE_MAX_ITERS",
                 "LEBESGUE_TRUNCATE", "LEBESGUE_HORIZON", "LEBESGUE_SEED", "LEBESGUE_LOG_LEVEL",
                 "LEBESGUE_PARALLEL_ORACLES"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def cfg() -> ToleranceConfig:
    return ToleranceConfig()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(PANEL_SEED)


def random_psd(rng: np.random.Generator, dim: int, rank: int | None = None,
               complex_: bool = False, spread: tuple[float, float] = (0.0, 2.0)) -> PsdMatrix:
    """U·diag(λ)·U* со случайным унитарным U и λ из spread на первых rank позициях."""
    rank = dim if rank is None else rank
    a = rng.standard_normal((dim, dim))
    if complex_:
        a = a + 1j * rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(a)
    lam = np.zeros(dim)
    lam[:rank] = rng.uniform(*spread, size=rank)
    return PsdMatrix.of((q * lam) @ q.conj().T)


def random_pair(rng: np.random.Generator, dim: int, t_rank: int, complex_: bool = False):
    S = random_psd(rng, dim, complex_=complex_, spread=(0.05, 2.0))
    T = random_psd(rng, dim, rank=t_rank, complex_=complex_, spread=(0.5, 2.0))
    return S, T


def pair_panel(count: int, seed: int = PANEL_SEED, max_dim: int = 30):
    """count пар размерности 2..max_dim с рангами T от 1 до dim."""
    rng = np.random.default_rng(seed)
    panel = []
    for i in range(count):
        dim = int(rng.integers(2, max_dim + 1))
        t_rank = int(rng.integers(1, dim + 1))
        panel.append(random_pair(rng, dim, t_rank, complex_=(i % 4 == 3)))
    return panel


def ill_conditioned_panel(count: int, seed: int = PANEL_SEED + 1, max_dim: int = 12):
    """Пары с вырожденной T, спектр которой разнесён от 1e-4 до 1.

    Чётные пары: S общего положения. Нечётные: S сидит на ker T, [T]S = 0
    и всё, что насчитают оракулы, шум.
    """
    rng = np.random.default_rng(seed)
    panel = []
    for i in range(count):
        dim = int(rng.integers(2, max_dim + 1))
        t_rank = int(rng.integers(1, dim))
        complex_ = i % 4 == 3
        a = rng.standard_normal((dim, dim))
        if complex_:
            a = a + 1j * rng.standard_normal((dim, dim))
        q, _ = np.linalg.qr(a)
        t = np.zeros(dim)
        t[:t_rank] = np.logspace(-4, 0, t_rank)
        T = PsdMatrix.of((q * t) @ q.conj().T)
        if i % 2:
            s = np.zeros(dim)
            s[t_rank:] = rng.uniform(0.5, 2.0, size=dim - t_rank)
            S = PsdMatrix.of((q * s) @ q.conj().T)
        else:
            S = random_psd(rng, dim, complex_=complex_, spread=(0.05, 2.0))
        panel.append((S, T))
    return panel


def random_sequence(rng: np.random.Generator, prefix_len: int = 6, zero_share: float = 0.3,
                    with_tail: bool = True) -> L1Sequence:
    prefix = rng.uniform(0.1, 1.0, size=prefix_len)
    prefix[rng.uniform(size=prefix_len) < zero_share] = 0.0
    tail = GeometricTail(float(rng.uniform(0.2, 1.0)), float(rng.uniform(0.8, 0.95))) if with_tail else None
    return L1Sequence(tuple(prefix), tail)


@pytest.fixture
def psd_factory(rng):
    return lambda dim, rank=None, complex_=False: random_psd(rng, dim, rank, complex_)
