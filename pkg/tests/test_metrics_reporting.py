"""Tests for accuracy metrics and report emission."""

from pathlib import Path

import pytest
import torch
from PIL import Image

from genifer.core.exceptions import ConfigurationError, ContractError
from genifer.schemas.records import AccuracyTrace, ClassifierPhaseRecord, RunRecord, TaskRecord
from genifer.services.data.dataset import DatasetIndex
from genifer.services.data.tasks import Normalizer
from genifer.services.models.classifier import Classifier
from genifer.services.reports import (
    accuracy_from_logits,
    average_incremental_accuracy,
    emit_report,
    generate_summary_pdf,
    overall_accuracy,
    read_run_record,
    sample_grid,
    summary_rows,
    write_run_record,
)
from genifer.services.reports.export import SUMMARY_HEADERS, summary_csv
from genifer.services.trainer import ContinualTrainer


def _record(run_id: str, mode: str, seed: int, trace: list[float], per_task: int = 5) -> RunRecord:
    tasks = [
        TaskRecord(
            task=t,
            classes=list(range((t - 1) * per_task, t * per_task)),
            alpha_all_t=a,
            classifier=ClassifierPhaseRecord(epochs=1, batches=2, lambda_od_final=None if t == 1 else 1.4),
            wall_seconds=1.5,
        )
        for t, a in enumerate(trace, start=1)
    ]
    return RunRecord(
        run_id=run_id,
        mode=mode,
        seed=seed,
        split_seed=0,
        config_hash="abc",
        first_task_size=per_task,
        classes_per_task=per_task,
        tasks=tasks,
        alpha_all=average_incremental_accuracy(trace) if len(trace) > 1 else None,
    )


@pytest.fixture
def records() -> list[RunRecord]:
    """Two modes over two seeds."""
    return [
        _record("ifm-s0", "ifm", 0, [0.9, 0.8, 0.6]),
        _record("ifm-s1", "ifm", 1, [0.9, 0.7, 0.5]),
        _record("dfm-s0", "dfm", 0, [0.9, 0.6, 0.4]),
    ]


def _biased_classifier() -> Classifier:
    classifier = Classifier(widths=(8, 16, 16, 16), head_init="zeros").expand_head([3, 7])
    with torch.no_grad():
        classifier.head.bias.copy_(torch.tensor([1.0, 0.0]))  # type: ignore[union-attr]
    return classifier


def _test_set(labels: list[int]) -> DatasetIndex:
    return DatasetIndex(
        images=torch.rand(len(labels), 16, 16, 3),
        labels=torch.tensor(labels),
        class_count=10,
        split="test",
    )


class TestAccuracy:
    """Tests for overall accuracy."""

    def test_three_of_four(self, normalizer: Normalizer) -> None:
        """Test a classifier always predicting class 3 scores 0.75 on three 3s and one 7."""
        assert overall_accuracy(_biased_classifier(), _test_set([3, 3, 7, 3]), normalizer) == 0.75

    def test_all_correct(self, normalizer: Normalizer) -> None:
        """Test perfect predictions score 1.0."""
        assert overall_accuracy(_biased_classifier(), _test_set([3, 3]), normalizer) == 1.0

    def test_batched_evaluation(self, normalizer: Normalizer) -> None:
        """Test the result does not depend on the evaluation batch size."""
        data = _test_set([3, 7, 7, 3, 3])
        assert overall_accuracy(_biased_classifier(), data, normalizer, batch_size=2) == pytest.approx(0.6)

    def test_empty_test_set(self, normalizer: Normalizer) -> None:
        """Test an empty test set is a contract error."""
        with pytest.raises(ContractError):
            overall_accuracy(_biased_classifier(), _test_set([]), normalizer)

    def test_random_classifier_near_chance(self) -> None:
        """Test random logits over K classes score about 1/K."""
        g = torch.Generator().manual_seed(0)
        n, k = 20_000, 4
        accuracy = accuracy_from_logits(torch.randn(n, k, generator=g), torch.randint(0, k, (n,), generator=g))
        sigma = (0.25 * 0.75 / n) ** 0.5
        assert abs(accuracy - 0.25) <= 3 * sigma


class TestAverageIncrementalAccuracy:
    """Tests for the average over tasks 2..T."""

    def test_excludes_first_task(self) -> None:
        """Test [0.9, 0.8, 0.6] gives 0.7."""
        assert average_incremental_accuracy([0.9, 0.8, 0.6]) == pytest.approx(0.7)

    def test_constant_trace(self) -> None:
        """Test a constant trace averages to its value."""
        assert average_incremental_accuracy(AccuracyTrace(values=[0.4] * 5)) == pytest.approx(0.4)

    def test_single_task(self) -> None:
        """Test T=1 is a contract error."""
        with pytest.raises(ContractError):
            average_incremental_accuracy([0.9])

    def test_trace_rejects_out_of_range(self) -> None:
        """Test accuracies outside [0, 1] are rejected."""
        with pytest.raises(ValueError):
            AccuracyTrace(values=[0.5, 1.2])


class TestExports:
    """Tests for structured exports."""

    def test_summary_groups_by_mode(self, records: list[RunRecord]) -> None:
        """Test one row per mode with mean and per-seed values."""
        rows = summary_rows(records)
        assert [r[0] for r in rows] == ["dfm", "ifm"]
        ifm = rows[1]
        assert ifm[2] == 2
        assert ifm[3] == "0.650000"
        assert ifm[6] == "0:0.700000 1:0.600000"

    def test_summary_csv_header(self, records: list[RunRecord]) -> None:
        """Test the CSV starts with the documented header."""
        assert summary_csv(records).splitlines()[0] == ",".join(SUMMARY_HEADERS)

    def test_metric_records(self, records: list[RunRecord]) -> None:
        """Test one metric record per (run, task)."""
        metrics = records[0].metric_records()
        assert [m.task for m in metrics] == [1, 2, 3]
        assert metrics[1].lambda_od_final == 1.4
        assert metrics[0].ada_p_final is None

    def test_run_record_round_trip(self, tmp_path: Path, records: list[RunRecord]) -> None:
        """Test a written run record reads back equal."""
        path = write_run_record(records[0], tmp_path / "run.json")
        assert read_run_record(path) == records[0]

    def test_invalid_run_record(self, tmp_path: Path) -> None:
        """Test malformed JSON is a configuration error."""
        path = tmp_path / "bad.json"
        path.write_text("{}", encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_run_record(path)


class TestEmitReport:
    """Tests for report emission."""

    def test_single_run(self, tmp_path: Path) -> None:
        """Test one run gives one curve file and one table row."""
        emit_report([_record("r", "ifm", 0, [0.9, 0.8])], tmp_path, pdf=False)
        assert len(list(tmp_path.glob("curves_*.png"))) == 1
        assert len((tmp_path / "summary.csv").read_text().splitlines()) == 2

    def test_files_written(self, tmp_path: Path, records: list[RunRecord]) -> None:
        """Test every artifact is written, with runs sharing a split on one axis."""
        written = emit_report(records, tmp_path)
        names = {p.name for p in written}
        assert {"summary.csv", "metrics.jsonl", "summary.pdf", "curves_b5_c5.png"} <= names
        assert len(list((tmp_path / "runs").glob("*.json"))) == 3
        assert (tmp_path / "summary.pdf").read_bytes().startswith(b"%PDF")

    def test_idempotent(self, tmp_path: Path, records: list[RunRecord]) -> None:
        """Test rerunning on the same records rewrites byte-identical data files."""
        emit_report(records, tmp_path, pdf=False)
        first = {p: p.read_bytes() for p in tmp_path.rglob("*") if p.suffix in {".csv", ".jsonl", ".json"}}
        emit_report(records, tmp_path, pdf=False)
        assert first == {p: p.read_bytes() for p in tmp_path.rglob("*") if p.suffix in {".csv", ".jsonl", ".json"}}

    def test_empty_records(self, tmp_path: Path) -> None:
        """Test emitting nothing is a contract error."""
        with pytest.raises(ContractError):
            emit_report([], tmp_path)

    def test_pdf_is_deterministic(self, records: list[RunRecord]) -> None:
        """Test the PDF summary carries no timestamps."""
        assert generate_summary_pdf(records) == generate_summary_pdf(records)


class TestSampleGrid:
    """Tests for the generator sample grid."""

    def test_grid_layout(self, tmp_path: Path, micro_run: ContinualTrainer) -> None:
        """Test one row per class and one column per sample."""
        assert micro_run.gan is not None
        path = sample_grid(micro_run.gan, [0, 1], 3, tmp_path / "grid.png")
        with Image.open(path) as image:
            assert image.size == (3 * 16, 2 * 16)
            assert image.mode == "RGB"
