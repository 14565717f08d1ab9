from __future__ import annotations

from typing import Any

import numpy as np

from data.matrices import HermitianMatrix, PsdMatrix
from data.tolerance import ToleranceConfig
from errors import SchemaError


def _grid(payload: dict, key: str, dim: int) -> np.ndarray:
    rows = payload.get(key)
    if not isinstance(rows, list) or len(rows) != dim:
        raise SchemaError(f"'{key}' must be a list of {dim} rows")
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise SchemaError(f"'{key}' row {i} must have {dim} entries (matrix must be square, not ragged)")
        for v in row:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"'{key}' row {i} holds a non-numeric entry {v!r}")
    return np.asarray(rows, dtype=np.float64)


def parse_entries(payload: Any) -> np.ndarray:
    """{"dim": n, "real": [[...]], "imag": [[...]]?} → массив n×n."""
    if not isinstance(payload, dict):
        raise SchemaError("matrix payload must be a JSON object")
    dim = payload.get("dim")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"'dim' must be a positive integer, got {dim!r}")
    real = _grid(payload, "real", dim)
    if payload.get("imag") is None:
        return real
    imag = _grid(payload, "imag", dim)
    return real + 1j * imag if np.any(imag) else real


def parse_psd(payload: Any, cfg: ToleranceConfig) -> PsdMatrix:
    return PsdMatrix(parse_entries(payload), psd_tol=cfg.psd_tol)


def dump_matrix(A: HermitianMatrix) -> dict:
    a = A.entries
    out = {"dim": A.dim, "real": [[float(v) for v in row] for row in np.real(a)]}
    if not A.is_real:
        out["imag"] = [[float(v) for v in row] for row in np.imag(a)]
    return out
