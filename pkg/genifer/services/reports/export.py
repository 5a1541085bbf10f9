"""Structured exports: run records, metric JSONL and the summary CSV."""

import csv
import io
import json
import logging
from collections import defaultdict
from collections.abc import Iterable
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from genifer.core.exceptions import ConfigurationError, ReportIOError
from genifer.schemas.records import MetricRecord, RunRecord

logger = logging.getLogger(__name__)

SUMMARY_HEADERS = [
    "mode",
    "classes_per_task",
    "runs",
    "alpha_all_mean",
    "alpha_all_std",
    "final_accuracy_mean",
    "per_seed_alpha_all",
]


def _format_float(value: float | None) -> str:
    """Fixed-precision float, empty for missing values."""
    return "" if value is None else f"{value:.6f}"


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    return path


def write_run_record(record: RunRecord, path: Path) -> Path:
    """Write one RunRecord as indented JSON."""
    return _write_text(path, json.dumps(record.model_dump(mode="json"), indent=2, sort_keys=True) + "\n")


def read_run_record(path: Path) -> RunRecord:
    """Read a RunRecord written by :func:`write_run_record`.

    Raises:
        ConfigurationError: If the file is missing or invalid
    """
    try:
        return RunRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Cannot read run record: {path}") from e
    except ValidationError as e:
        raise ConfigurationError(
            f"Invalid run record: {path}",
            details={"errors": e.errors(include_url=False, include_context=False)},
        ) from e


def metric_lines(records: Iterable[MetricRecord]) -> str:
    return "".join(json.dumps(r.model_dump(mode="json"), sort_keys=True) + "\n" for r in records)


def append_metric_records(path: Path, records: Iterable[MetricRecord]) -> None:
    """Append metric records to a JSONL file (one object per line)."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8", newline="") as f:
            f.write(metric_lines(records))
    except OSError as e:
        raise ReportIOError(f"Cannot append to {path}", details={"error": str(e)}) from e


def write_metric_records(records: Iterable[MetricRecord], path: Path) -> Path:
    """Replace ``path`` with the given metric records."""
    return _write_text(path, metric_lines(records))


def write_metric_jsonl(records: list[RunRecord], path: Path) -> Path:
    """Write every (run, task) metric record of ``records``."""
    return _write_text(path, metric_lines(m for r in records for m in r.metric_records()))


def summary_rows(records: list[RunRecord]) -> list[list[str | int]]:
    """Group runs by (mode, classes_per_task) and aggregate alpha_all over seeds."""
    groups: dict[tuple[str, int], list[RunRecord]] = defaultdict(list)
    for r in records:
        groups[(r.mode, r.classes_per_task)].append(r)

    rows: list[list[str | int]] = []
    for (mode, per_task), runs in sorted(groups.items()):
        runs = sorted(runs, key=lambda r: (r.seed, r.run_id))
        alphas = [r.alpha_all for r in runs if r.alpha_all is not None]
        finals = [r.accuracy_trace[-1] for r in runs if r.tasks]
        rows.append(
            [
                mode,
                per_task,
                len(runs),
                _format_float(float(np.mean(alphas)) if alphas else None),
                _format_float(float(np.std(alphas)) if alphas else None),
                _format_float(float(np.mean(finals)) if finals else None),
                " ".join(f"{r.seed}:{_format_float(r.alpha_all)}" for r in runs),
            ]
        )
    return rows


def summary_csv(records: list[RunRecord]) -> str:
    output = io.StringIO()
    writer = csv.writer(output, delimiter=",", quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(SUMMARY_HEADERS)
    writer.writerows(summary_rows(records))
    return output.getvalue()


def write_summary_csv(records: list[RunRecord], path: Path) -> Path:
    """Write the mode x task-size summary table."""
    logger.info(f"Writing summary table: path={path}, runs={len(records)}")
    return _write_text(path, summary_csv(records))
