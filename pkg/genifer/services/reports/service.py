"""Report emission for finished runs."""

import logging
from collections import defaultdict
from pathlib import Path

from genifer.core.exceptions import ContractError, ReportIOError
from genifer.schemas.records import RunRecord
from genifer.services.reports.export import write_metric_jsonl, write_run_record, write_summary_csv
from genifer.services.reports.pdf import write_summary_pdf
from genifer.services.reports.plots import plot_accuracy_curves

logger = logging.getLogger(__name__)


def emit_report(records: list[RunRecord], out_dir: Path, pdf: bool = True) -> list[Path]:
    """Write the summary table, curves, raw records and the PDF summary.

    One curve file is written per split (first task size, classes per task);
    all modes of that split share its axis. Rerunning on the same records
    rewrites identical data files.

    Args:
        records: Finished runs
        out_dir: Target directory
        pdf: Also write ``summary.pdf``

    Returns:
        Written paths

    Raises:
        ContractError: If ``records`` is empty
        ReportIOError: If ``out_dir`` is not writable
    """
    if not records:
        raise ContractError("emit_report needs at least one run record")
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ReportIOError(f"Cannot create report directory {out_dir}", details={"error": str(e)}) from e

    written = [
        write_summary_csv(records, out_dir / "summary.csv"),
        write_metric_jsonl(records, out_dir / "metrics.jsonl"),
    ]
    for r in records:
        written.append(write_run_record(r, out_dir / "runs" / f"{r.run_id}.json"))

    splits: dict[tuple[int, int], list[RunRecord]] = defaultdict(list)
    for r in records:
        splits[(r.first_task_size, r.classes_per_task)].append(r)
    curves = []
    for (first, per_task), group in sorted(splits.items()):
        path = out_dir / f"curves_b{first}_c{per_task}.png"
        curves.append(plot_accuracy_curves(group, path, title=f"first task {first}, {per_task} classes per task"))
    written.extend(curves)

    if pdf:
        written.append(write_summary_pdf(records, out_dir / "summary.pdf", curves[0] if curves else None))
    logger.info(f"Emitted report: out_dir={out_dir}, runs={len(records)}, files={len(written)}")
    return written
