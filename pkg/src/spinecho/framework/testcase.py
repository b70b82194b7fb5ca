from __future__ import annotations
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List

from ..assertions.core import AssertError, Assertion
from ..errors import SpinEchoError


@dataclass
class CheckCase:
    """A measurement and the assertions it must satisfy."""

    name: str
    measure: Callable[[], Dict[str, float]]
    assertions: List[Assertion] = field(default_factory=list)

    def run(self) -> "CheckReport":
        started = time.perf_counter()
        try:
            values = self.measure()
        except SpinEchoError as e:
            return CheckReport(
                name=self.name,
                ok=False,
                errors=[f"[measure] {type(e).__name__}: {e}"],
                values={},
                elapsed_s=time.perf_counter() - started,
            )

        errors: List[str] = []
        for a in self.assertions:
            try:
                a.check(values)
            except AssertError as e:
                errors.append(f"[{a.name}] {e}")

        return CheckReport(
            name=self.name,
            ok=(len(errors) == 0),
            errors=errors,
            values=values,
            elapsed_s=time.perf_counter() - started,
        )


@dataclass(frozen=True)
class CheckReport:
    name: str
    ok: bool
    errors: List[str]
    values: Dict[str, float]
    elapsed_s: float = 0.0
