from __future__ import annotations
from dataclasses import dataclass
from typing import Mapping

from .suite import SuiteReport


def _measured(values: Mapping[str, float]) -> str:
    if not values:
        return "no values measured"
    return ", ".join(f"{k}={v:.4g}" for k, v in sorted(values.items()))


@dataclass(frozen=True)
class ConsoleReporter:
    """Prints one line per check and, with ``verbose``, the values every
    check measured. Failed checks always show theirs, and the summary
    repeats them."""

    verbose: bool = False

    def render(self, rep: SuiteReport) -> int:
        print(f"== Suite: {rep.name} ==")
        for r in rep.reports:
            status = "PASS" if r.ok else "FAIL"
            print(f"- {status} {r.name} ({r.elapsed_s:.1f} s)")
            if self.verbose or not r.ok:
                for key, value in sorted(r.values.items()):
                    print(f"    {key} = {value:.6g}")
            for e in r.errors:
                print(f"    {e}")
        failures = rep.failures()
        total = len(rep.reports)
        print(f"== Result: {total - len(failures)}/{total} passed ==")
        for r in failures:
            print(f"   failed {r.name}: {_measured(r.values)}")
        return 1 if failures else 0
