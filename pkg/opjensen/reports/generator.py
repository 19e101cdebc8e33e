"""
Report generation utilities.
Human-readable campaign summaries, the coefficient table as CSV and
JSON-lines report streams.
"""
import csv
import io
import sys
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

from pydantic import ValidationError

from opjensen.core.coefficients import classify_coefficient
from opjensen.core.errors import ConfigError
from opjensen.core.functions import HFunction, format_number
from opjensen.core.models import CampaignSummary, InequalityReport, SearchResult


def format_coefficient(value: float) -> str:
    """12 decimals, trailing zeros stripped: 1.414213562373, 1"""
    if value != value or value in (float('inf'), float('-inf')):
        return str(value)
    return f"{value:.12f}".rstrip('0').rstrip('.')


def generate_summary_report(summary: CampaignSummary) -> str:
    """
    Generate text summary report from a campaign summary.

    Args:
        summary: Aggregated campaign results

    Returns:
        Formatted text report
    """
    lines = []

    # Header
    lines.append("=" * 70)
    lines.append(f"CAMPAIGN REPORT: {summary.target}")
    lines.append("=" * 70)
    lines.append(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    lines.append("")

    # Summary statistics
    lines.append("SUMMARY STATISTICS")
    lines.append("-" * 70)
    lines.append(f"Reports:           {summary.total}")
    lines.append(f"Held:              {summary.held}")
    lines.append(f"Violated:          {summary.violated}")
    lines.append(f"Vacuous:           {summary.vacuous}")
    lines.append(f"Errors:            {summary.errors}")
    if summary.worst_slack is not None:
        lines.append(f"Worst slack:       {summary.worst_slack:.6e}")
    lines.append(f"Wall time:         {summary.wall_time_seconds:.2f}s")
    lines.append("")

    if summary.first_violation is not None:
        report = summary.first_violation
        lines.append("FIRST VIOLATION")
        lines.append("-" * 70)
        lines.append(f"Inequality: {report.name}  (policy {report.policy})")
        lines.append(f"  lhs = {report.lhs!r}")
        lines.append(f"  rhs = {report.rhs!r}")
        lines.append(f"  slack = {report.slack!r}")
        lines.append(f"  f = {report.witness.f}, h = {report.witness.h}, "
                     f"n = {report.witness.n}, seed = {report.witness.seed}")
        lines.append("")

    lines.append("=" * 70)
    lines.append("RESULT: " + ("CLEAN" if summary.clean else "VIOLATIONS FOUND"))
    lines.append("=" * 70)

    return "\n".join(lines)


def generate_search_report(result: SearchResult) -> str:
    """Text report of a counterexample search"""
    parts = [
        generate_summary_report(result.above_half),
        generate_summary_report(result.below_half),
    ]
    verdict = 'consistent' if result.consistent else 'INCONSISTENT'
    parts.append(
        f"h(t)/t decreasing: {'yes' if result.h_over_t_decreasing else 'no'}; "
        f"violations below 1/2: {result.below_half.violated} ({verdict})"
    )
    return "\n\n".join(parts)


def coefficient_table(s: float = 0.5) -> list:
    """
    (family, Safe coefficient) rows for the five named families.

    Raises:
        ConfigError: If s lies outside (0, 1]
    """
    try:
        families = [
            ('identity', HFunction.identity()),
            ('constant', HFunction.constant(1.0)),
            (f'power:{format_number(s)}', HFunction.power(s)),
            ('reciprocal', HFunction.reciprocal()),
            (f'recpower:{format_number(s)}', HFunction.reciprocal_power(s)),
        ]
    except ValidationError as e:
        raise ConfigError(f'Invalid exponent s={s!r} for the coefficient table: {e}') from e
    return [(name, classify_coefficient(h)) for name, h in families]


def generate_csv_table(s: float = 0.5) -> str:
    """
    Coefficient table as CSV with header family,coefficient.

    Args:
        s: Exponent of the power and recpower rows
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')

    # Header
    writer.writerow(['family', 'coefficient'])

    # Data rows
    for name, value in coefficient_table(s):
        writer.writerow([name, format_coefficient(value)])

    return buffer.getvalue()


def write_reports(reports: Iterable[InequalityReport], stream: TextIO):
    """One JSON object per line"""
    for report in reports:
        stream.write(report.to_json())
        stream.write("\n")


@contextmanager
def report_sink(output_path: Optional[str]):
    """
    Yield a callback writing reports as JSON lines to output_path,
    or to stdout when no path is given.
    """
    if output_path:
        with open(Path(output_path), 'w', encoding='utf-8') as f:
            yield lambda report: write_reports([report], f)
    else:
        yield lambda report: write_reports([report], sys.stdout)


def generate_json_summary(summary: Union[CampaignSummary, SearchResult]) -> str:
    """Campaign summary or search result as JSON"""
    return summary.model_dump_json(indent=2)
