"""Class-incremental task split, task loaders and normalization."""

import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import torch
from torch.utils.data import DataLoader, TensorDataset

from genifer.core.exceptions import ConfigurationError, RangeError, ShapeError
from genifer.core.seeding import make_generator
from genifer.services.data.dataset import DatasetIndex, subset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaskSequence:
    """Ordered, pairwise-disjoint class sets C_1..C_T (task ids are 1-based)."""

    tasks: tuple[tuple[int, ...], ...]
    first_task_size: int
    classes_per_task: int

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def _check(self, t: int) -> None:
        if not 1 <= t <= self.num_tasks:
            raise RangeError(f"task {t} outside [1, {self.num_tasks}]", details={"task": t})

    def classes(self, t: int) -> tuple[int, ...]:
        """Return C_t."""
        self._check(t)
        return self.tasks[t - 1]

    def classes_up_to(self, t: int) -> tuple[int, ...]:
        """Return C_1 ∪ ... ∪ C_t in task order."""
        self._check(t)
        return tuple(c for task in self.tasks[:t] for c in task)

    def previous_classes(self, t: int) -> tuple[int, ...]:
        """Return C_1 ∪ ... ∪ C_{t-1} (empty for t = 1)."""
        self._check(t)
        return tuple(c for task in self.tasks[: t - 1] for c in task)

    def task_of(self, class_id: int) -> int:
        """Return the task that introduces ``class_id``."""
        for t, task in enumerate(self.tasks, start=1):
            if class_id in task:
                return t
        raise RangeError(f"class {class_id} belongs to no task")


def build_task_sequence(
    index: DatasetIndex,
    first_task_size: int,
    classes_per_task: int,
    seed: int,
) -> TaskSequence:
    """Partition the dataset's classes into a class-incremental sequence.

    Task 1 gets ``first_task_size`` classes, every later task gets
    ``classes_per_task``. The class-to-task assignment is a seeded shuffle of the
    class ids; classes inside a task are sorted.

    Raises:
        ConfigurationError: If the remaining classes do not divide evenly
    """
    class_count = index.class_count
    if first_task_size < 1 or first_task_size > class_count:
        raise ConfigurationError(
            f"first_task_size={first_task_size} must be in [1, {class_count}]",
            details={"first_task_size": first_task_size, "class_count": class_count},
        )
    remaining = class_count - first_task_size
    if classes_per_task < 1 or remaining % classes_per_task != 0:
        raise ConfigurationError(
            f"remaining classes ({class_count} - first_task_size={first_task_size} = {remaining}) "
            f"are not divisible by classes_per_task={classes_per_task}",
            details={"first_task_size": first_task_size, "classes_per_task": classes_per_task},
        )

    order = torch.randperm(class_count, generator=make_generator(seed)).tolist()
    tasks = [tuple(sorted(order[:first_task_size]))]
    for start in range(first_task_size, class_count, classes_per_task):
        tasks.append(tuple(sorted(order[start : start + classes_per_task])))

    logger.info(
        f"Built task sequence: classes={class_count}, tasks={len(tasks)}, "
        f"first={first_task_size}, per_task={classes_per_task}, seed={seed}"
    )
    return TaskSequence(tasks=tuple(tasks), first_task_size=first_task_size, classes_per_task=classes_per_task)


class TaskLoader:
    """Seeded single-consumer batch iterator over one task's samples.

    Each ``iter()`` starts a new epoch; epoch k of two loaders built with the
    same seed yields identical batches. Images are yielded as (B, C, H, W) in
    [0, 1] with global labels.
    """

    def __init__(self, data: DatasetIndex, batch_size: int, seed: int) -> None:
        if batch_size < 1:
            raise ConfigurationError(f"batch_size must be positive, got {batch_size}")
        self.data = data
        self.batch_size = batch_size
        self.seed = seed
        self._generator = make_generator(seed)
        self._loader = DataLoader(
            TensorDataset(data.channels_first(), data.labels),
            batch_size=batch_size,
            shuffle=True,
            drop_last=False,
            generator=self._generator,
        )

    def __len__(self) -> int:
        return len(self._loader)

    def __iter__(self) -> Iterator[tuple[torch.Tensor, torch.Tensor]]:
        for images, labels in self._loader:
            yield images, labels


def task_loader(
    index: DatasetIndex,
    seq: TaskSequence,
    t: int,
    batch_size: int,
    seed: int,
) -> TaskLoader:
    """Return a deterministic loader over the samples of task ``t``.

    Raises:
        RangeError: If ``t`` is outside [1, T]
    """
    return TaskLoader(subset(index, seq.classes(t)), batch_size=batch_size, seed=seed)


def _channel_constants(
    images: torch.Tensor, mean: Sequence[float], std: Sequence[float]
) -> tuple[torch.Tensor, torch.Tensor]:
    if images.ndim < 3:
        raise ShapeError(f"images need a channel axis at dim -3, got shape {tuple(images.shape)}")
    channels = images.shape[-3]
    if len(mean) != channels or len(std) != channels:
        raise ShapeError(
            f"{channels}-channel images but {len(mean)} means / {len(std)} stds",
            details={"channels": channels},
        )
    m = torch.as_tensor(mean, dtype=images.dtype, device=images.device).view(-1, 1, 1)
    s = torch.as_tensor(std, dtype=images.dtype, device=images.device).view(-1, 1, 1)
    return m, s


def normalize(images: torch.Tensor, mean: Sequence[float], std: Sequence[float]) -> torch.Tensor:
    """Per-channel (x - mean) / std for channel-first images in [0, 1]."""
    m, s = _channel_constants(images, mean, std)
    return (images - m) / s


def denormalize(images: torch.Tensor, mean: Sequence[float], std: Sequence[float]) -> torch.Tensor:
    """Inverse of :func:`normalize`."""
    m, s = _channel_constants(images, mean, std)
    return images * s + m


def from_generator_range(images: torch.Tensor) -> torch.Tensor:
    """Map generator output in [-1, 1] to [0, 1]."""
    return (images + 1.0) * 0.5


def to_generator_range(images: torch.Tensor) -> torch.Tensor:
    """Map images in [0, 1] to the generator range [-1, 1]."""
    return images * 2.0 - 1.0


@dataclass(frozen=True)
class Normalizer:
    """Configured normalization constants bound to the classifier input."""

    mean: tuple[float, ...]
    std: tuple[float, ...]

    def unit(self, images: torch.Tensor) -> torch.Tensor:
        """Classifier input from images in [0, 1]."""
        return normalize(images, self.mean, self.std)

    def generated(self, images: torch.Tensor) -> torch.Tensor:
        """Classifier input from generator-range images in [-1, 1]."""
        return normalize(from_generator_range(images), self.mean, self.std)
