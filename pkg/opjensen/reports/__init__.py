"""opjensen - Reports Package"""

from opjensen.reports.generator import (
    generate_csv_table,
    generate_summary_report,
    report_sink,
)

__all__ = [
    'generate_csv_table',
    'generate_summary_report',
    'report_sink',
]
