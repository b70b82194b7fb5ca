from __future__ import annotations
from dataclasses import dataclass
from typing import Callable, Mapping


class AssertError(AssertionError):
    pass


Measurements = Mapping[str, float]


@dataclass(frozen=True)
class Assertion:
    name: str
    check: Callable[[Measurements], None]


def require(predicate: bool, msg: str) -> None:
    if not predicate:
        raise AssertError(msg)


def measured(values: Measurements, key: str) -> float:
    require(key in values, f"'{key}' was not measured")
    return float(values[key])
