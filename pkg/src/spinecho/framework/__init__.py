from .reporter import ConsoleReporter
from .suite import CheckSuite, SuiteReport
from .testcase import CheckCase, CheckReport

__all__ = [
    "CheckCase",
    "CheckReport",
    "CheckSuite",
    "ConsoleReporter",
    "SuiteReport",
]
