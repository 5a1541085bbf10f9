"""Metrics, structured exports, figures and the PDF summary."""

from genifer.services.reports.export import (
    read_run_record,
    summary_rows,
    write_metric_jsonl,
    write_run_record,
    write_summary_csv,
)
from genifer.services.reports.metrics import (
    accuracy_from_logits,
    average_incremental_accuracy,
    overall_accuracy,
    task_accuracies,
)
from genifer.services.reports.pdf import generate_summary_pdf, write_summary_pdf
from genifer.services.reports.plots import plot_accuracy_curves, sample_grid
from genifer.services.reports.service import emit_report

__all__ = [
    "accuracy_from_logits",
    "average_incremental_accuracy",
    "emit_report",
    "generate_summary_pdf",
    "overall_accuracy",
    "plot_accuracy_curves",
    "read_run_record",
    "sample_grid",
    "summary_rows",
    "task_accuracies",
    "write_metric_jsonl",
    "write_run_record",
    "write_summary_csv",
    "write_summary_pdf",
]
