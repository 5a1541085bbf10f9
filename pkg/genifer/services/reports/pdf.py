"""PDF summary of one or more runs using ReportLab."""

import io
import logging
from pathlib import Path

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, StyleSheet1, getSampleStyleSheet
from reportlab.lib.units import cm, mm
from reportlab.platypus import Image, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from genifer import __version__
from genifer.core.exceptions import ReportIOError
from genifer.schemas.records import RunRecord
from genifer.services.reports.export import SUMMARY_HEADERS, summary_rows

logger = logging.getLogger(__name__)

HEADER_BG = colors.HexColor("#e8eef4")
GRID_COLOR = colors.HexColor("#b0b7bf")
ACCENT = colors.HexColor("#2c3e50")

# name -> (parent, overrides)
STYLE_SPECS: dict[str, tuple[str, dict[str, object]]] = {
    "RunTitle": ("Heading1", {"fontSize": 20, "textColor": ACCENT, "alignment": 1, "spaceAfter": 4}),
    "RunSubtitle": ("Normal", {"fontSize": 10, "textColor": colors.gray, "alignment": 1, "spaceAfter": 14}),
    "Section": ("Heading2", {"fontSize": 13, "textColor": ACCENT, "spaceBefore": 14, "spaceAfter": 6}),
    "Footer": ("Normal", {"fontSize": 7, "textColor": colors.gray, "alignment": 1}),
}


def summary_styles() -> StyleSheet1:
    """Sample stylesheet extended with the summary's paragraph styles."""
    styles = getSampleStyleSheet()
    for name, (parent, overrides) in STYLE_SPECS.items():
        styles.add(ParagraphStyle(name=name, parent=styles[parent], **overrides))  # type: ignore[arg-type]
    return styles


def _grid_table(rows: list[list[str]], col_widths: list[float] | None = None) -> Table:
    table = Table(rows, colWidths=col_widths, repeatRows=1)
    table.setStyle(TableStyle([
        ("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold"),
        ("BACKGROUND", (0, 0), (-1, 0), HEADER_BG),
        ("FONTSIZE", (0, 0), (-1, -1), 8),
        ("TOPPADDING", (0, 0), (-1, -1), 4),
        ("BOTTOMPADDING", (0, 0), (-1, -1), 4),
        ("LINEBELOW", (0, 0), (-1, -1), 0.5, GRID_COLOR),
        ("VALIGN", (0, 0), (-1, -1), "TOP"),
    ]))
    return table


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{100 * value:.1f}"


def generate_summary_pdf(records: list[RunRecord], curves_png: Path | None = None) -> bytes:
    """Build the summary document.

    Args:
        records: Runs to summarize
        curves_png: Accuracy-curve image to embed (optional)

    Returns:
        PDF file content as bytes (byte-stable for identical inputs)
    """
    buffer = io.BytesIO()
    doc = SimpleDocTemplate(
        buffer,
        pagesize=A4,
        rightMargin=2 * cm,
        leftMargin=2 * cm,
        topMargin=2 * cm,
        bottomMargin=2 * cm,
        invariant=1,
        title="genifer run summary",
    )

    styles = summary_styles()
    story = []

    story.append(Paragraph("Run summary", styles["RunTitle"]))
    story.append(Paragraph(f"{len(records)} class-incremental runs", styles["RunSubtitle"]))

    story.append(Paragraph("Average incremental accuracy", styles["Section"]))
    story.append(_grid_table([SUMMARY_HEADERS[:6], *[[str(v) for v in row[:6]] for row in summary_rows(records)]]))

    if curves_png is not None and curves_png.exists():
        story.append(Spacer(1, 6 * mm))
        story.append(Image(str(curves_png), width=14 * cm, height=9.3 * cm))

    story.append(Paragraph("Runs", styles["Section"]))
    run_rows = [["run", "seed", "alpha_all [%]", "final [%]", "lambda_OD", "ADA p"]]
    for r in sorted(records, key=lambda r: (r.mode, r.seed, r.run_id)):
        last = r.tasks[-1] if r.tasks else None
        run_rows.append([
            r.run_id,
            str(r.seed),
            _pct(r.alpha_all),
            _pct(last.alpha_all_t if last else None),
            "-" if last is None or last.lambda_od_final is None else f"{last.lambda_od_final:.2f}",
            "-" if last is None or last.ada_p_final is None else f"{last.ada_p_final:.3f}",
        ])
    story.append(_grid_table(run_rows))

    for r in sorted(records, key=lambda r: (r.mode, r.seed, r.run_id)):
        if len(r.tasks) < 2:
            continue
        story.append(Paragraph(f"Per-task accuracy: {r.run_id}", styles["Section"]))
        header = ["after task", *[f"T{t.task}" for t in r.tasks]]
        rows = [header]
        for t in r.tasks:
            rows.append([str(t.task), *[_pct(t.task_accuracies.get(i.task)) for i in r.tasks]])
        story.append(_grid_table(rows))

    story.append(Spacer(1, 10 * mm))
    story.append(Paragraph(f"genifer {__version__}", styles["Footer"]))

    doc.build(story)
    return buffer.getvalue()


def write_summary_pdf(records: list[RunRecord], path: Path, curves_png: Path | None = None) -> Path:
    """Write :func:`generate_summary_pdf` output to ``path``."""
    content = generate_summary_pdf(records, curves_png)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(content)
    except OSError as e:
        raise ReportIOError(f"Cannot write {path}", details={"error": str(e)}) from e
    logger.info(f"Wrote summary PDF: path={path}, runs={len(records)}")
    return path
