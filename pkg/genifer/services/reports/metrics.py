"""Incremental-accuracy metrics."""

from collections.abc import Sequence

import numpy as np
import torch

from genifer.core.exceptions import ContractError
from genifer.schemas.records import AccuracyTrace
from genifer.services.data.dataset import DatasetIndex, subset
from genifer.services.data.tasks import Normalizer, TaskSequence
from genifer.services.models.classifier import Classifier


def accuracy_from_logits(logits: torch.Tensor, targets: torch.Tensor) -> float:
    """Fraction of rows whose argmax equals the target logit index.

    Raises:
        ContractError: If there are no rows
    """
    if targets.numel() == 0:
        raise ContractError("accuracy of an empty set is undefined")
    return float((logits.argmax(dim=1) == targets).float().mean())


@torch.no_grad()
def overall_accuracy(
    classifier: Classifier,
    test_data: DatasetIndex,
    normalizer: Normalizer,
    batch_size: int = 256,
) -> float:
    """Argmax accuracy of the joint head over every seen class.

    ``test_data`` must already be restricted to the seen classes.

    Raises:
        ContractError: If the test set is empty
        RangeError: If it contains classes the classifier has not seen
    """
    if len(test_data) == 0:
        raise ContractError("overall accuracy needs a non-empty test set")
    was_training = classifier.training
    classifier.eval()
    device = next(classifier.parameters()).device
    images = test_data.channels_first()
    correct = 0
    for start in range(0, len(test_data), batch_size):
        x = normalizer.unit(images[start : start + batch_size].to(device))
        y = classifier.label_indices(test_data.labels[start : start + batch_size].to(device))
        correct += int((classifier.classify(x).argmax(dim=1) == y).sum())
    classifier.train(was_training)
    return correct / len(test_data)


def task_accuracies(
    classifier: Classifier,
    test_data: DatasetIndex,
    seq: TaskSequence,
    t: int,
    normalizer: Normalizer,
) -> dict[int, float]:
    """Joint-head accuracy restricted to the test classes of each task 1..t."""
    return {
        i: overall_accuracy(classifier, subset(test_data, seq.classes(i)), normalizer) for i in range(1, t + 1)
    }


def average_incremental_accuracy(trace: AccuracyTrace | Sequence[float]) -> float:
    """Mean of alpha_all,t over t = 2..T (the first task is excluded).

    Raises:
        ContractError: If T < 2
    """
    values = trace.values if isinstance(trace, AccuracyTrace) else list(trace)
    if len(values) < 2:
        raise ContractError(f"average incremental accuracy needs T >= 2, got T={len(values)}")
    return float(np.mean(values[1:]))
