from __future__ import annotations

from typing import Any

from data.sequences import GeometricTail, L1Sequence
from errors import SchemaError


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where} must be a number, got {value!r}")
    return float(value)


def parse_sequence(payload: Any) -> L1Sequence:
    """{"prefix": [...], "tail": {"type": "geometric", "a": …, "r": …, "log_a"?: …} | null}."""
    if not isinstance(payload, dict):
        raise SchemaError("sequence payload must be a JSON object")
    prefix = payload.get("prefix", [])
    if not isinstance(prefix, list):
        raise SchemaError("'prefix' must be a list")
    values = tuple(_number(v, f"prefix[{i}]") for i, v in enumerate(prefix))

    tail = payload.get("tail")
    if tail is None:
        return L1Sequence(values, None)
    if not isinstance(tail, dict) or tail.get("type") != "geometric":
        raise SchemaError("'tail' must be null or an object with type 'geometric'")
    r = _number(tail.get("r"), "tail.r")
    if tail.get("log_a") is not None:
        return L1Sequence(values, GeometricTail.from_log(_number(tail["log_a"], "tail.log_a"), r))
    return L1Sequence(values, GeometricTail(_number(tail.get("a"), "tail.a"), r))


def dump_sequence(x: L1Sequence) -> dict:
    tail = None
    if x.tail is not None:
        tail = {"type": "geometric", "a": x.tail.a, "r": x.tail.r}
        if x.tail.a == 0.0:
            # a ушло в underflow, сохраняем логарифм
            tail["log_a"] = x.tail.log_a
    return {"prefix": list(x.prefix), "tail": tail}
