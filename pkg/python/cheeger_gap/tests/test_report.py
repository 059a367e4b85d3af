"""Tests for check reports."""

import pytest

from cheeger_gap.errors import ConfigurationError, VerificationError
from cheeger_gap.report import Report


def _report() -> Report:
    report = Report("demo")
    report.within("small", 1e-14, 1e-12)
    report.skip("too_big", "N exceeds enum_limit")
    return report


class TestReport:
    """Test Report bookkeeping."""

    def test_skips_do_not_fail(self) -> None:
        report = _report()
        assert report.passed
        assert report.first_failure() is None
        report.raise_for_failure(VerificationError)

    def test_raise_names_first_failure(self) -> None:
        report = _report()
        report.within("gap", 0.5, 1e-12, "bound exceeds gap")
        report.add("later", False)
        with pytest.raises(VerificationError, match="first failing check 'gap'") as info:
            report.raise_for_failure(VerificationError)
        assert "bound exceeds gap" in str(info.value)
        assert info.value.exit_code == 1

    def test_non_finite_value_fails(self) -> None:
        report = Report("demo")
        assert not report.within("nan", float("nan"), 1.0).passed

    def test_extend_prefixes_names(self) -> None:
        outer = Report("outer")
        outer.extend(_report(), prefix="suite.instance")
        assert [c.name for c in outer] == ["suite.instance.small", "suite.instance.too_big"]
        assert outer["suite.instance.too_big"].skipped


def test_configuration_errors_are_input_errors() -> None:
    error = ConfigurationError("bad")
    assert isinstance(error, ValueError)
    assert error.exit_code == 2
