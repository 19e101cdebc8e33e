"""
Tests for text, CSV and JSON report generation.
"""
import io
import json
import math

import pytest

from opjensen.core.errors import ConfigError
from opjensen.core.functions import HFunction, ScalarFunction
from opjensen.core.inequalities import mond_pecaric_check
from opjensen.core.models import CampaignSummary, CoefficientPolicy, HermitianMatrix, UnitVector
from opjensen.reports.generator import (
    coefficient_table,
    format_coefficient,
    generate_json_summary,
    generate_summary_report,
    write_reports,
)


@pytest.fixture
def violation():
    """Coefficient 1 on diag(1, 0)"""
    A, x = HermitianMatrix.diagonal([1.0, 0.0]), UnitVector.normalized([1.0, 1.0])
    return mond_pecaric_check(ScalarFunction.sqrt(), HFunction.power(0.5), A, x,
                              CoefficientPolicy.paper_literal(), override=True, seed=5)


class TestFormatting:
    """Coefficient formatting"""

    @pytest.mark.parametrize('value,expected', [
        (1.0, '1'),
        (math.sqrt(2.0), '1.414213562373'),
        (0.5, '0.5'),
        (math.inf, 'inf'),
    ])
    def test_format_coefficient(self, value, expected):
        """12 decimals with trailing zeros stripped"""
        assert format_coefficient(value) == expected

    def test_coefficient_table(self):
        """Five rows in a fixed order"""
        names = [name for name, _ in coefficient_table(0.25)]
        assert names == ['identity', 'constant', 'power:0.25', 'reciprocal', 'recpower:0.25']

    def test_coefficient_table_rejects_bad_exponent(self):
        """s outside (0, 1] is a configuration error"""
        with pytest.raises(ConfigError, match='s=2.0'):
            coefficient_table(2.0)


class TestSummaryReport:
    """Text and JSON summaries"""

    def test_clean(self):
        """An empty campaign is clean"""
        text = generate_summary_report(CampaignSummary(target='thm1'))
        assert 'CAMPAIGN REPORT: thm1' in text
        assert 'RESULT: CLEAN' in text

    def test_violation_details(self, violation):
        """The first violation is spelled out"""
        summary = CampaignSummary(target='thm1-paper-literal')
        summary.add_report(violation)
        text = generate_summary_report(summary)
        assert 'FIRST VIOLATION' in text
        assert 'seed = 5' in text
        assert 'RESULT: VIOLATIONS FOUND' in text

    def test_json_summary(self, violation):
        """The summary serializes with its counters"""
        summary = CampaignSummary(target='thm1')
        summary.add_report(violation)
        data = json.loads(generate_json_summary(summary))
        assert (data['total'], data['violated']) == (1, 1)
        assert data['first_violation']['name'] == 'thm1'


class TestReportStream:
    """JSON lines"""

    def test_one_object_per_line(self, violation):
        """Each report becomes one line"""
        stream = io.StringIO()
        write_reports([violation, violation], stream)
        lines = stream.getvalue().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])['holds'] is False
