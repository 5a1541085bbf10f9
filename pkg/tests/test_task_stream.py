"""Tests for datasets, task splits, loaders and normalization."""

import random
from pathlib import Path

import pytest
import torch
from pydantic import ValidationError

from genifer.core.exceptions import ConfigurationError, RangeError, ShapeError
from genifer.schemas.experiment import DatasetConfig, DatasetSource
from genifer.services.data import (
    DatasetIndex,
    build_task_sequence,
    denormalize,
    load_dataset_pair,
    load_image_folder,
    make_toy_dataset,
    normalize,
    subset,
    task_loader,
    write_image_folder,
)
from genifer.services.data.source import resolve_dataset_path
from genifer.services.data.toy import TOY_CLASS_NAMES


def _index(class_count: int, per_class: int = 1) -> DatasetIndex:
    labels = torch.arange(class_count).repeat_interleave(per_class)
    return DatasetIndex(
        images=torch.rand(len(labels), 4, 4, 3),
        labels=labels,
        class_count=class_count,
        split="train",
    )


class TestDatasetIndex:
    """Tests for DatasetIndex validation."""

    def test_label_out_of_range(self) -> None:
        """Test labels outside [0, class_count) are rejected."""
        with pytest.raises(RangeError):
            DatasetIndex(images=torch.rand(2, 4, 4, 3), labels=torch.tensor([0, 3]), class_count=3, split="train")

    def test_shape_mismatch(self) -> None:
        """Test label count must match image count."""
        with pytest.raises(ShapeError):
            DatasetIndex(images=torch.rand(2, 4, 4, 3), labels=torch.tensor([0]), class_count=3, split="train")

    def test_toy_dataset_covers_all_classes(self) -> None:
        """Test the toy set has every class in both splits, values in [0, 1]."""
        train = make_toy_dataset(3, "train", image_size=16)
        test = make_toy_dataset(3, "test", image_size=16)
        assert train.classes_present() == test.classes_present() == set(range(10))
        assert train.images.min() >= 0.0 and train.images.max() <= 1.0
        assert tuple(train.images.shape) == (30, 16, 16, 3)

    def test_toy_dataset_is_deterministic(self) -> None:
        """Test the same seed yields identical images."""
        a = make_toy_dataset(2, "train", image_size=16, seed=7)
        b = make_toy_dataset(2, "train", image_size=16, seed=7)
        assert torch.equal(a.images, b.images)

    def test_train_and_test_differ(self) -> None:
        """Test the two splits draw different samples."""
        a = make_toy_dataset(2, "train", image_size=16)
        b = make_toy_dataset(2, "test", image_size=16)
        assert not torch.equal(a.images, b.images)

    @pytest.mark.parametrize("class_count", [0, 11])
    def test_toy_class_count_out_of_range(self, class_count: int) -> None:
        """Test a class count outside 1..10 is a configuration error."""
        with pytest.raises(ConfigurationError):
            make_toy_dataset(1, "train", image_size=16, class_count=class_count)


class TestBuildTaskSequence:
    """Tests for the class-incremental split protocol."""

    @pytest.mark.parametrize(("per_task", "expected"), [(25, 3), (10, 6), (5, 11), (2, 26)])
    def test_hundred_class_splits(self, per_task: int, expected: int) -> None:
        """Test first_task_size=50 on 100 classes yields the expected task counts."""
        seq = build_task_sequence(_index(100), 50, per_task, seed=0)
        assert seq.num_tasks == expected
        assert len(seq.classes(1)) == 50
        assert all(len(seq.classes(t)) == per_task for t in range(2, expected + 1))

    def test_two_equal_halves(self) -> None:
        """Test 10 classes split 5 + 5."""
        seq = build_task_sequence(_index(10), 5, 5, seed=0)
        assert [len(c) for c in seq.tasks] == [5, 5]

    def test_divisibility_error_names_both_counts(self) -> None:
        """Test an uneven remainder is a configuration error naming both counts."""
        with pytest.raises(ConfigurationError) as exc:
            build_task_sequence(_index(10), 5, 3, seed=0)
        assert "first_task_size=5" in exc.value.message
        assert "classes_per_task=3" in exc.value.message

    def test_deterministic_for_seed(self) -> None:
        """Test the same seed gives the same assignment, another seed a different one."""
        a = build_task_sequence(_index(20), 10, 5, seed=3)
        b = build_task_sequence(_index(20), 10, 5, seed=3)
        c = build_task_sequence(_index(20), 10, 5, seed=4)
        assert a == b
        assert a.tasks != c.tasks

    def test_partition_fuzz(self) -> None:
        """Test partition invariants over 1000 random valid configurations."""
        rng = random.Random(0)
        for _ in range(1000):
            first = rng.randint(1, 30)
            per_task = rng.randint(1, 10)
            class_count = first + per_task * rng.randint(0, 8)
            seq = build_task_sequence(_index(class_count), first, per_task, seed=rng.randint(0, 10**6))
            flat = [c for task in seq.tasks for c in task]
            assert sorted(flat) == list(range(class_count))
            assert len(seq.classes(1)) == first
            assert seq.num_tasks == 1 + (class_count - first) // per_task

    def test_classes_up_to_and_previous(self) -> None:
        """Test cumulative class helpers."""
        seq = build_task_sequence(_index(10), 4, 2, seed=0)
        assert seq.previous_classes(1) == ()
        assert set(seq.classes_up_to(2)) == set(seq.classes(1)) | set(seq.classes(2))
        assert seq.previous_classes(3) == seq.classes_up_to(2)
        assert seq.task_of(seq.classes(2)[0]) == 2

    def test_task_out_of_range(self) -> None:
        """Test task ids outside [1, T] raise a range error."""
        seq = build_task_sequence(_index(10), 5, 5, seed=0)
        with pytest.raises(RangeError):
            seq.classes(0)
        with pytest.raises(RangeError):
            seq.classes(3)


class TestTaskLoader:
    """Tests for deterministic task iteration."""

    def test_only_task_classes(self) -> None:
        """Test task 1 never yields a class of task 2."""
        index = _index(10, per_class=4)
        seq = build_task_sequence(index, 5, 5, seed=0)
        for _, labels in task_loader(index, seq, 1, batch_size=3, seed=0):
            assert set(labels.tolist()) <= set(seq.classes(1))

    def test_same_seed_same_order(self) -> None:
        """Test identical seeds give byte-identical batch streams."""
        index = _index(10, per_class=4)
        seq = build_task_sequence(index, 5, 5, seed=0)
        a = [(x.clone(), y.clone()) for x, y in task_loader(index, seq, 2, batch_size=4, seed=11)]
        b = [(x.clone(), y.clone()) for x, y in task_loader(index, seq, 2, batch_size=4, seed=11)]
        assert all(torch.equal(xa, xb) and torch.equal(ya, yb) for (xa, ya), (xb, yb) in zip(a, b, strict=True))

    def test_batch_larger_than_task_is_truncated(self) -> None:
        """Test a batch size above the task size yields one short batch."""
        index = _index(10, per_class=2)
        seq = build_task_sequence(index, 5, 5, seed=0)
        batches = list(task_loader(index, seq, 1, batch_size=64, seed=0))
        assert len(batches) == 1
        assert batches[0][0].shape[0] == 10
        assert batches[0][0].shape[1] == 3  # channel-first

    def test_out_of_range_task(self) -> None:
        """Test a loader for a missing task raises a range error."""
        index = _index(10)
        seq = build_task_sequence(index, 5, 5, seed=0)
        with pytest.raises(RangeError):
            task_loader(index, seq, 3, batch_size=2, seed=0)


class TestNormalize:
    """Tests for per-channel normalization."""

    def test_mean_image_maps_to_zero(self) -> None:
        """Test an image equal to the mean normalizes to zeros."""
        mean = (0.2, 0.4, 0.6)
        images = torch.tensor(mean).view(1, 3, 1, 1).expand(2, 3, 4, 4)
        assert torch.allclose(normalize(images, mean, (0.5, 0.5, 0.5)), torch.zeros(2, 3, 4, 4))

    def test_identity_constants(self) -> None:
        """Test mean 0, std 1 is the identity."""
        images = torch.rand(2, 3, 4, 4)
        assert torch.equal(normalize(images, (0.0,) * 3, (1.0,) * 3), images)

    def test_half_constants(self) -> None:
        """Test mean 0.5, std 0.5 maps 1.0 to 1.0."""
        out = normalize(torch.ones(1, 3, 2, 2), (0.5,) * 3, (0.5,) * 3)
        assert torch.allclose(out, torch.ones(1, 3, 2, 2))

    def test_channel_mismatch(self) -> None:
        """Test constants of the wrong length raise a shape error."""
        with pytest.raises(ShapeError):
            normalize(torch.rand(1, 3, 2, 2), (0.5,), (0.5,))

    def test_denormalize_inverts(self) -> None:
        """Test denormalize(normalize(x)) recovers x."""
        x = torch.rand(2, 3, 4, 4)
        mean, std = (0.1, 0.2, 0.3), (0.3, 0.2, 0.1)
        assert torch.allclose(denormalize(normalize(x, mean, std), mean, std), x, atol=1e-6)


class TestImageFolder:
    """Tests for the documented directory layout."""

    def test_write_then_load(self, tmp_path: Path) -> None:
        """Test a toy index written to disk loads back with the same labels."""
        index = make_toy_dataset(2, "train", image_size=16)
        write_image_folder(index, tmp_path, TOY_CLASS_NAMES)
        loaded = load_image_folder(tmp_path, "train")
        assert loaded.class_names == TOY_CLASS_NAMES
        assert sorted(loaded.labels.tolist()) == sorted(index.labels.tolist())
        assert loaded.image_size == 16
        assert (tmp_path / "manifest.json").exists()

    def test_missing_manifest(self, tmp_path: Path) -> None:
        """Test a folder without manifest is a configuration error."""
        with pytest.raises(ConfigurationError):
            load_image_folder(tmp_path, "train")

    def test_folder_source(self, tmp_path: Path) -> None:
        """Test the folder source loads both splits through the dataset config."""
        for split in ("train", "test"):
            write_image_folder(make_toy_dataset(1, split, image_size=16), tmp_path, TOY_CLASS_NAMES)
        config = DatasetConfig(source=DatasetSource.FOLDER, path=tmp_path, image_size=16)
        train, test = load_dataset_pair(config)
        assert train.class_count == test.class_count == 10

    def test_grayscale_folder(self, tmp_path: Path) -> None:
        """Test one-channel folders load as (N, H, W, 1) through the dataset config."""
        for split in ("train", "test"):
            rgb = make_toy_dataset(1, split, image_size=16)
            gray = DatasetIndex(
                images=rgb.images.mean(dim=-1, keepdim=True),
                labels=rgb.labels,
                class_count=rgb.class_count,
                split=split,
            )
            write_image_folder(gray, tmp_path, TOY_CLASS_NAMES)
        loaded = load_image_folder(tmp_path, "train", channels=1)
        assert loaded.channels == 1
        assert loaded.images.shape == (10, 16, 16, 1)

        config = DatasetConfig(
            source=DatasetSource.FOLDER, path=tmp_path, image_size=16, channels=1, mean=(0.5,), std=(0.25,)
        )
        train, test = load_dataset_pair(config)
        assert train.channels == test.channels == 1

    def test_rgb_folder_as_grayscale(self, tmp_path: Path) -> None:
        """Test an RGB folder converts to one channel on load."""
        write_image_folder(make_toy_dataset(1, "train", image_size=16), tmp_path, TOY_CLASS_NAMES)
        assert load_image_folder(tmp_path, "train", channels=1).channels == 1

    def test_unsupported_channels(self, tmp_path: Path) -> None:
        """Test channel counts other than 1 and 3 are rejected."""
        write_image_folder(make_toy_dataset(1, "train", image_size=16), tmp_path, TOY_CLASS_NAMES)
        with pytest.raises(ConfigurationError):
            load_image_folder(tmp_path, "train", channels=4)

    def test_grayscale_toy_source(self) -> None:
        """Test the toy source averages to one channel."""
        config = DatasetConfig(image_size=16, channels=1, mean=(0.5,), std=(0.25,), toy_train_per_class=1)
        train, test = load_dataset_pair(config)
        assert train.channels == test.channels == 1

    def test_relative_path_uses_data_root(self, tmp_path: Path) -> None:
        """Test a relative dataset path resolves against the data root and an absolute one is kept."""
        for split in ("train", "test"):
            write_image_folder(make_toy_dataset(1, split, image_size=16), tmp_path / "toy", TOY_CLASS_NAMES)
        relative = DatasetConfig(source=DatasetSource.FOLDER, path=Path("toy"), image_size=16)
        assert resolve_dataset_path(relative, tmp_path) == tmp_path / "toy"
        train, _ = load_dataset_pair(relative, tmp_path)
        assert train.class_count == 10
        absolute = DatasetConfig(source=DatasetSource.FOLDER, path=tmp_path / "toy", image_size=16)
        assert resolve_dataset_path(absolute, Path("elsewhere")) == tmp_path / "toy"

    def test_folder_without_path(self) -> None:
        """Test the folder source without a path is rejected at config time."""
        with pytest.raises(ValidationError):
            DatasetConfig(source=DatasetSource.FOLDER, image_size=16)

    def test_subset(self) -> None:
        """Test subset keeps only the requested classes."""
        index = _index(6, per_class=2)
        assert subset(index, [1, 4]).classes_present() == {1, 4}
