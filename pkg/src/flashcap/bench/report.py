"""Verification reports: one record per certified inequality check.

A case passes when measured <= bound + tolerance, i.e. its margin
(bound - measured) is at least -tolerance, where the tolerance covers
statistical or quadrature error only.  A genuine violation of a checked
bound therefore shows up as a large negative margin and fails loudly.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CaseResult:
    label: str
    measured: float
    bound: float
    tolerance: float
    skipped: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    @property
    def passed(self) -> bool:
        return self.skipped or self.margin >= -self.tolerance

    def as_record(self) -> dict:
        return {
            "label": self.label,
            "measured": self.measured,
            "bound": self.bound,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "skipped": self.skipped,
            "passed": self.passed,
            **self.extra,
        }


@dataclass(frozen=True)
class VerificationReport:
    name: str
    anchor: str
    cases: tuple[CaseResult, ...]
    wall_time: float

    @property
    def cases_run(self) -> int:
        return sum(1 for c in self.cases if not c.skipped)

    @property
    def cases_skipped(self) -> int:
        return sum(1 for c in self.cases if c.skipped)

    @property
    def cases_passed(self) -> int:
        return sum(1 for c in self.cases if not c.skipped and c.passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def worst_margin(self) -> float:
        margins = [c.margin for c in self.cases if not c.skipped]
        return min(margins) if margins else math.inf

    @property
    def tolerance(self) -> float:
        tols = [c.tolerance for c in self.cases if not c.skipped]
        return max(tols) if tols else 0.0

    def as_record(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "cases": self.cases_run,
            "cases_passed": self.cases_passed,
            "cases_skipped": self.cases_skipped,
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "wall_time": self.wall_time,
            "details": [c.as_record() for c in self.cases],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_record())


class ReportTimer:
    """Collects cases and stamps the wall time into the final report."""

    def __init__(self, name: str, anchor: str):
        self.name = name
        self.anchor = anchor
        self.cases: list[CaseResult] = []
        self._t0 = time.perf_counter()

    def add(self, label, measured, bound, tolerance, skipped=False, **extra) -> CaseResult:
        case = CaseResult(
            label=label,
            measured=float(measured),
            bound=float(bound),
            tolerance=float(tolerance),
            skipped=skipped,
            extra=extra,
        )
        self.cases.append(case)
        return case

    def finish(self) -> VerificationReport:
        return VerificationReport(
            name=self.name,
            anchor=self.anchor,
            cases=tuple(self.cases),
            wall_time=time.perf_counter() - self._t0,
        )
