"""
GField - Special VarTypes: property check reports

    Harnesses never raise on a failed property, they record it here
"""
# License: GPLv3, see License.txt

from __future__ import annotations

import math

from dataclasses import dataclass, field

import pandas

from ..common import ensure_serializable
from .base import SpecialVarType


@dataclass
class CheckResult:
    """Outcome of one property check"""
    name: str
    """Short identifier of the property, like 'sub-additivity'"""
    passed: bool
    """Did the check hold within tolerance"""
    worst_violation: float = 0.0
    """Largest observed violation magnitude (0 when the property held exactly)"""
    tolerance: float = 0.0
    """Tolerance the violation was compared against"""
    detail: str = ''
    """Free-form context: instance, values, engine"""

    @ensure_serializable
    def to_dict(self) -> dict:
        """Convert this result to a dict for serialization"""
        return {
            'name': self.name,
            'passed': bool(self.passed),
            'worst_violation': _json_float(self.worst_violation),
            'tolerance': float(self.tolerance),
            'detail': self.detail,
        }

    @staticmethod
    def from_dict(data: dict) -> CheckResult:
        """Create this result from a dict, output of to_dict"""
        worst = data['worst_violation']
        return CheckResult(data['name'], data['passed'], math.inf if worst is None else worst, data['tolerance'], data.get('detail', ''))


def _json_float(value: float):
    """json has no inf / nan"""
    value = float(value)
    if math.isfinite(value):
        return value
    return None


class CheckReport(SpecialVarType):
    """Collection of property check results for one suite"""

    def __init__(self, suite: str = '', results: list[CheckResult] = None) -> None:
        super().__init__()
        self.suite = suite
        """Name of the suite that produced these results"""
        self.results: list[CheckResult] = [] if results is None else list(results)
        """Individual results, in the order they were checked"""

    def add(self, name: str, violation: float, tolerance: float, detail: str = '') -> CheckResult:
        """
        Record a check from its violation magnitude
            a violation is a nonnegative shortfall; negative values count as 0
        """
        violation = float(violation)
        if math.isnan(violation):
            violation = math.inf
        violation = max(0.0, violation)
        result = CheckResult(name, violation <= tolerance, violation, float(tolerance), detail)
        self.results.append(result)
        return result

    def add_bool(self, name: str, passed: bool, detail: str = '') -> CheckResult:
        """Record an exact (yes / no) check"""
        result = CheckResult(name, bool(passed), 0.0 if passed else 1.0, 0.0, detail)
        self.results.append(result)
        return result

    def merge(self, other: CheckReport, prefix: str = '') -> CheckReport:
        """Append the results of another report, optionally prefixing their names"""
        for result in other.results:
            name = f'{prefix}{result.name}' if prefix else result.name
            self.results.append(CheckResult(name, result.passed, result.worst_violation, result.tolerance, result.detail))
        return self

    @property
    def passed(self) -> bool:
        """All checks passed (an empty report passes)"""
        return all(result.passed for result in self.results)

    @property
    def worst_violation(self) -> float:
        """Worst violation across all checks"""
        if not self.results:
            return 0.0
        return max(result.worst_violation for result in self.results)

    def failures(self) -> list[CheckResult]:
        """Results that did not pass"""
        return [result for result in self.results if not result.passed]

    def get(self, name: str) -> CheckResult:
        """First result with the given name"""
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)

    def to_dataframe(self) -> pandas.DataFrame:
        """Results as a table, one row per check"""
        rows = [dict(suite=self.suite, **result.to_dict()) for result in self.results]
        return pandas.DataFrame(rows, columns=['suite', 'name', 'passed', 'worst_violation', 'tolerance', 'detail'])

    def __repr__(self) -> str:
        status = 'pass' if self.passed else 'FAIL'
        return f'CheckReport({self.suite!r}, {len(self.results)} checks, {status})'

    @ensure_serializable
    def to_dict(self) -> dict:
        return {
            'suite': self.suite,
            'passed': self.passed,
            'results': [result.to_dict() for result in self.results],
        }

    @staticmethod
    def from_dict(data: dict) -> CheckReport:
        return CheckReport(data['suite'], [CheckResult.from_dict(item) for item in data['results']])

    @staticmethod
    def default() -> CheckReport:
        return CheckReport('', [])


@dataclass
class SuiteSummary:
    """Aggregate of several reports, used by `check --all`"""
    reports: list[CheckReport] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Every suite passed"""
        return all(report.passed for report in self.reports)

    @ensure_serializable
    def to_dict(self) -> dict:
        """Single pass/fail summary plus the per-suite reports"""
        return {
            'passed': self.passed,
            'suites': {report.suite: report.passed for report in self.reports},
            'reports': [report.to_dict() for report in self.reports],
        }
