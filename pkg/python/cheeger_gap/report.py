"""
Pass/fail reports returned by the checking operations.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Iterator

from .errors import CheegerGapError


@dataclasses.dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""
    skipped: bool = False

    def __str__(self) -> str:
        status = "skip" if self.skipped else ("pass" if self.passed else "FAIL")
        parts = [f"[{status}] {self.name}"]
        if self.value is not None:
            parts.append(f"value={self.value:.6g}")
        if self.tolerance is not None:
            parts.append(f"tol={self.tolerance:.1e}")
        if self.detail:
            parts.append(self.detail)
        return " ".join(parts)


@dataclasses.dataclass
class Report:
    """An ordered collection of named checks."""

    title: str
    checks: list[CheckResult] = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed or c.skipped for c in self.checks)

    def __iter__(self) -> Iterator[CheckResult]:
        return iter(self.checks)

    def __len__(self) -> int:
        return len(self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def add(
        self,
        name: str,
        passed: bool,
        value: float | None = None,
        tolerance: float | None = None,
        detail: str = "",
    ) -> CheckResult:
        check = CheckResult(
            name=name,
            passed=bool(passed),
            value=None if value is None else float(value),
            tolerance=tolerance,
            detail=detail,
        )
        self.checks.append(check)
        return check

    def within(
        self, name: str, value: float, tolerance: float, detail: str = ""
    ) -> CheckResult:
        """Record a check that passes when `value` is finite and at most `tolerance`."""
        return self.add(
            name,
            math.isfinite(value) and value <= tolerance,
            value=value,
            tolerance=tolerance,
            detail=detail,
        )

    def skip(self, name: str, reason: str) -> CheckResult:
        check = CheckResult(name=name, passed=True, detail=reason, skipped=True)
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str | None = None) -> None:
        for check in other.checks:
            name = f"{prefix}.{check.name}" if prefix else check.name
            self.checks.append(dataclasses.replace(check, name=name))

    def first_failure(self) -> CheckResult | None:
        for check in self.checks:
            if not check.passed and not check.skipped:
                return check
        return None

    def raise_for_failure(self, exc_type: type[CheegerGapError]) -> None:
        """Raise `exc_type` naming the first failing check, if there is one."""
        failure = self.first_failure()
        if failure is not None:
            detail = f" ({failure.detail})" if failure.detail else ""
            raise exc_type(f"{self.title}: first failing check '{failure.name}'{detail}")

    def __str__(self) -> str:
        lines = [f"{self.title}: {'pass' if self.passed else 'FAIL'}"]
        lines.extend(f"  {check}" for check in self.checks)
        return "\n".join(lines)
