"""Classifier phase: current-task cross-entropy plus distillation on replayed samples."""

import copy
import logging
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch.optim import RAdam
from torch.optim.lr_scheduler import MultiStepLR

from genifer.core.exceptions import StateError
from genifer.core.seeding import derive_seed, make_generator
from genifer.schemas.experiment import ExperimentConfig, MatchingMode
from genifer.schemas.records import ClassifierPhaseRecord
from genifer.services.adaptive.coefficient import AdaptiveCoefState
from genifer.services.augmentation.classifier import apply_classifier_augs
from genifer.services.data.dataset import DatasetIndex
from genifer.services.data.tasks import Normalizer, TaskLoader, TaskSequence, from_generator_range
from genifer.services.losses.functional import (
    DistillationPair,
    classifier_loss,
    current_task_loss,
    output_distillation_loss,
)
from genifer.services.models.classifier import Classifier
from genifer.services.models.gan import GanState, generate, parameter_fingerprint
from genifer.services.trainer.audit import ModelAudit

logger = logging.getLogger(__name__)


@dataclass
class ReplayBatch:
    """Synthetic previous-class samples for one classifier batch."""

    inputs: torch.Tensor  # normalized images, or tap features in DFM
    labels: torch.Tensor  # global class ids
    is_features: bool


def sample_replay(
    gan: GanState,
    classes: tuple[int, ...],
    count: int,
    generator: torch.Generator,
    normalizer: Normalizer,
    config: ExperimentConfig,
) -> ReplayBatch:
    """Draw ``count`` samples from the averaged generator, classes uniform over ``classes``."""
    device = next(gan.ema_generator.parameters()).device
    pick = torch.randint(0, len(classes), (count,), generator=generator)
    labels = torch.tensor(classes, dtype=torch.long)[pick].to(device)
    z = torch.randn(count, config.generator.z_dim, generator=generator).to(device)
    out = generate(gan, z, labels, use_ema=True)
    if gan.mode == MatchingMode.DFM:
        return ReplayBatch(inputs=out, labels=labels, is_features=True)

    images = from_generator_range(out).clamp(0.0, 1.0)
    if config.augmentation.augment_synthetic:
        images = apply_classifier_augs(images, config.augmentation.classifier_ops, generator)
    return ReplayBatch(inputs=normalizer.unit(images), labels=labels, is_features=False)


def _logits(model: Classifier, batch: ReplayBatch) -> torch.Tensor:
    return model.head_forward(batch.inputs) if batch.is_features else model.classify(batch.inputs)


def train_classifier_task(
    classifier: Classifier,
    gan_prev: GanState | None,
    task_data: DatasetIndex,
    seq: TaskSequence,
    task: int,
    config: ExperimentConfig,
    normalizer: Normalizer,
    adaptive: AdaptiveCoefState,
    seed: int,
    audit: ModelAudit | None = None,
) -> tuple[Classifier, ClassifierPhaseRecord]:
    """Train the classifier on task ``task``.

    The head is expanded with the task's classes first. From task 2 on, each
    batch of size B holds floor(eta * B) synthetic previous-class samples from
    ``gan_prev``'s averaged generator and B - floor(eta * B) real current
    images. Distillation targets come from a frozen copy of the classifier as
    it was before this task.

    Args:
        classifier: Classifier after task - 1 (modified in place)
        gan_prev: GAN after task - 1, or None on the first task
        task_data: Training samples of C_task
        seq: Task sequence
        task: 1-based task id
        config: Experiment config
        normalizer: Normalization constants
        adaptive: lambda_OD controller (window is reset by the caller)
        seed: Run seed
        audit: Optional model-retention audit

    Returns:
        (classifier, phase record)

    Raises:
        StateError: If replay is needed but no previous generator exists
    """
    r = config.replay
    prev_classes = seq.previous_classes(task)
    replay = task >= 2 and r.batch_ratio > 0 and bool(prev_classes)
    if replay and (gan_prev is None or not gan_prev.trained_classes):
        raise StateError(f"task {task} needs a previous generator for replay", details={"task": task})

    teacher: Classifier | None = None
    if replay:
        teacher = copy.deepcopy(classifier).eval().requires_grad_(False)
    classifier.expand_head(seq.classes(task))
    if audit is not None:
        audit.observe(classifiers=1 + int(teacher is not None), gan=gan_prev)

    n_syn = math.floor(r.batch_ratio * r.batch_size) if replay else 0
    n_real = max(1, r.batch_size - n_syn)
    device = next(classifier.parameters()).device
    loader = TaskLoader(task_data, batch_size=n_real, seed=derive_seed(seed, "loader", task))
    rng = make_generator(derive_seed(seed, "classifier", task))

    params = [p for p in classifier.parameters() if p.requires_grad]
    optimizer = RAdam(params, lr=r.learning_rate, weight_decay=r.weight_decay, decoupled_weight_decay=True)
    scheduler = MultiStepLR(optimizer, milestones=list(r.lr_milestones), gamma=1.0 / r.lr_decay_factor)
    teacher_print = parameter_fingerprint(teacher) if teacher is not None and r.check_invariants else None

    record = ClassifierPhaseRecord(epochs=r.classifier_epochs, batches=0)
    history_start = len(adaptive.history)
    classifier.train()
    logger.info(
        f"Classifier phase: task={task}, classes={list(seq.classes(task))}, replay={replay}, "
        f"real_per_batch={n_real}, synthetic_per_batch={n_syn}, lambda_od={adaptive.lambda_od}"
    )

    for epoch in range(r.classifier_epochs):
        curr_losses: list[float] = []
        od_losses: list[float] = []
        for images, labels in loader:
            images, labels = images.to(device), labels.to(device)
            images = apply_classifier_augs(images, config.augmentation.classifier_ops, rng)
            logits = classifier.classify(normalizer.unit(images))
            l_curr = current_task_loss(logits, classifier.label_indices(labels))

            loss: torch.Tensor = l_curr
            if replay and n_syn > 0:
                assert gan_prev is not None and teacher is not None
                batch = sample_replay(gan_prev, prev_classes, n_syn, rng, normalizer, config)
                with torch.no_grad():
                    old_logits = _logits(teacher, batch)
                l_od = output_distillation_loss(DistillationPair(old_logits, _logits(classifier, batch)))
                loss = classifier_loss(l_curr, l_od, adaptive.lambda_od)  # type: ignore[assignment]
                adaptive.record_batch(float(l_curr), float(l_od)).maybe_update()
                od_losses.append(float(l_od))

            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            curr_losses.append(float(l_curr))
            record.batches += 1

        scheduler.step()
        record.curr_loss.append(float(np.mean(curr_losses)))
        if od_losses:
            record.od_loss.append(float(np.mean(od_losses)))
        logger.debug(
            f"Classifier epoch: task={task}, epoch={epoch + 1}, curr={record.curr_loss[-1]:.4f}, "
            f"od={record.od_loss[-1] if od_losses else 0.0:.4f}, lambda_od={adaptive.lambda_od}"
        )

    if teacher_print is not None and parameter_fingerprint(teacher) != teacher_print:  # type: ignore[arg-type]
        raise StateError("distillation teacher changed during the classifier phase", details={"task": task})

    record.lambda_trace = list(adaptive.history[history_start:])
    record.lambda_od_final = adaptive.lambda_od if replay else None
    logger.info(
        f"Classifier phase done: task={task}, batches={record.batches}, "
        f"curr={record.curr_loss[-1]:.4f}, lambda_od={record.lambda_od_final}"
    )
    return classifier, record
