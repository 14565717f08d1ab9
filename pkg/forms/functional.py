from __future__ import annotations

from typing import Any, Union

from data.functionals import NormalFunctional
from data.matrices import PsdMatrix
from data.sequences import L1Sequence
from data.tolerance import ToleranceConfig
from errors import SchemaError
from forms.matrix import dump_matrix, parse_psd
from forms.sequence import dump_sequence, parse_sequence


def detect_kind(payload: Any) -> str:
    """matrix / sequence / functional по набору ключей."""
    if not isinstance(payload, dict):
        raise SchemaError("payload must be a JSON object")
    if "kind" in payload and "rep" in payload:
        return "functional"
    if "prefix" in payload or "tail" in payload:
        return "sequence"
    if "real" in payload:
        return "matrix"
    raise SchemaError(f"cannot tell the payload kind from keys {sorted(payload)}")


def parse_functional(payload: Any, cfg: ToleranceConfig) -> NormalFunctional:
    """{"kind": "matrix"|"sequence", "rep": …, "label": …}."""
    if detect_kind(payload) != "functional":
        raise SchemaError("functional payload needs 'kind' and 'rep'")
    kind = payload["kind"]
    label = payload.get("label")
    if label is not None and not isinstance(label, str):
        raise SchemaError("'label' must be a string or null")
    if kind == "matrix":
        return NormalFunctional(parse_psd(payload["rep"], cfg), label)
    if kind == "sequence":
        return NormalFunctional(parse_sequence(payload["rep"]), label)
    raise SchemaError(f"unknown functional kind {kind!r}")


def parse_operand(payload: Any, cfg: ToleranceConfig) -> NormalFunctional:
    """Любой из трёх форматов как функционал (голый оператор идёт без метки)."""
    kind = detect_kind(payload)
    if kind == "functional":
        return parse_functional(payload, cfg)
    if kind == "sequence":
        return NormalFunctional(parse_sequence(payload))
    return NormalFunctional(parse_psd(payload, cfg))


def dump_rep(rep: Union[PsdMatrix, L1Sequence]) -> dict:
    return dump_matrix(rep) if isinstance(rep, PsdMatrix) else dump_sequence(rep)


def dump_functional(f: NormalFunctional) -> dict:
    return {"kind": f.kind, "rep": dump_rep(f.rep), "label": f.label}
