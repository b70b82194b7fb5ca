from .core import AssertError, Assertion, require
from .physics import assert_above, assert_below, assert_within

__all__ = [
    "AssertError",
    "Assertion",
    "assert_above",
    "assert_below",
    "assert_within",
    "require",
]
