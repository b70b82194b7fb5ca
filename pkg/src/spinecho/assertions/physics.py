from __future__ import annotations
import math

from .core import Assertion, Measurements, measured, require


def assert_below(key: str, bound: float) -> Assertion:
    def _check(values: Measurements) -> None:
        v = measured(values, key)
        require(math.isfinite(v) and v < bound,
                f"{key} = {v:.3e}, expected < {bound:.3e}")
    return Assertion(name=f"{key}_below_{bound:g}", check=_check)


def assert_above(key: str, bound: float) -> Assertion:
    def _check(values: Measurements) -> None:
        v = measured(values, key)
        require(math.isfinite(v) and v > bound,
                f"{key} = {v:.3e}, expected > {bound:.3e}")
    return Assertion(name=f"{key}_above_{bound:g}", check=_check)


def assert_within(key: str, lo: float, hi: float) -> Assertion:
    def _check(values: Measurements) -> None:
        v = measured(values, key)
        require(lo <= v <= hi,
                f"{key} = {v:.4g}, expected in [{lo:g}, {hi:g}]")
    return Assertion(name=f"{key}_in_{lo:g}_{hi:g}", check=_check)
