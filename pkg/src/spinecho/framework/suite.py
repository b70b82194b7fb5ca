from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

from ..errors import ConfigError
from .testcase import CheckCase, CheckReport

logger = logging.getLogger(__name__)


@dataclass
class CheckSuite:
    name: str
    cases: List[CheckCase] = field(default_factory=list)

    def run(self, only: Sequence[str] = ()) -> "SuiteReport":
        """Run every case, or just those named in ``only``."""
        known = {case.name for case in self.cases}
        unknown = [name for name in only if name not in known]
        if unknown:
            raise ConfigError(
                f"unknown check(s) {', '.join(unknown)} (have "
                f"{', '.join(sorted(known))})", "--only")
        reports: List[CheckReport] = []
        for case in self.cases:
            if only and case.name not in only:
                continue
            logger.info("check %s", case.name)
            reports.append(case.run())
        return SuiteReport(self.name, reports)


@dataclass(frozen=True)
class SuiteReport:
    name: str
    reports: List[CheckReport]

    def ok(self) -> bool:
        return all(r.ok for r in self.reports)

    def failures(self) -> List[CheckReport]:
        return [r for r in self.reports if not r.ok]
