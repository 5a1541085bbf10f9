"""GAN phase: alternate discriminator and generator steps against the surrogate set."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import torch
from torch.optim import Adam

from genifer.core.exceptions import ShapeError, StateError
from genifer.core.seeding import as_generator, derive_seed, make_generator
from genifer.schemas.experiment import ExperimentConfig, MatchingMode
from genifer.schemas.records import GanPhaseRecord
from genifer.services.augmentation.ada import AdaController, AdaPipeline, Side
from genifer.services.data.dataset import DatasetIndex
from genifer.services.data.tasks import Normalizer, TaskSequence, to_generator_range
from genifer.services.losses.functional import (
    discriminator_loss,
    generator_distillation_loss,
    generator_gan_loss,
    generator_loss,
    kappa,
    r1_penalty,
)
from genifer.services.models.classifier import Classifier
from genifer.services.models.gan import GanState, ema_update, freeze_previous, parameter_fingerprint
from genifer.services.trainer.audit import ModelAudit

logger = logging.getLogger(__name__)

LOG_WINDOW = 50  # D steps per averaged loss entry in the record

Encoder = Callable[[torch.Tensor], torch.Tensor]


@dataclass
class SurrogateBatch:
    """Real-side discriminator batch: current real samples plus previous-class synthetic ones."""

    samples: torch.Tensor  # generator output space: images in [-1, 1], or features in DFM
    labels: torch.Tensor
    synthetic: torch.Tensor  # bool mask


def build_surrogate_batch(
    task_data: DatasetIndex,
    gan_prev: GanState | None,
    seq: TaskSequence,
    n: int,
    batch_size: int,
    seed: int | torch.Generator,
    z_dim: int,
    encode: Encoder | None = None,
) -> SurrogateBatch:
    """Draw a labeled batch from X_n ∪ X'_{1:n-1}.

    Labels are uniform over C_1..C_n. A label of the current task gets a random
    real sample of that class; a previous-task label gets a fresh sample from
    the frozen previous averaged generator.

    Args:
        task_data: Real samples of C_n
        gan_prev: GAN holding the frozen previous generator (unused when n = 1)
        seq: Task sequence
        n: Current task id
        batch_size: Samples to draw
        seed: Seed or generator
        z_dim: Generator noise dimension
        encode: Maps real images in [-1, 1] to the generator output space (DFM)

    Raises:
        StateError: If a previous class is drawn but no frozen generator exists
    """
    generator = as_generator(seed)
    current = seq.classes(n)
    classes = torch.tensor(seq.classes_up_to(n), dtype=torch.long)
    labels = classes[torch.randint(0, len(classes), (batch_size,), generator=generator)]
    current_t = torch.tensor(current, dtype=torch.long)
    synthetic = ~torch.isin(labels, current_t)

    device = torch.device("cpu")
    if gan_prev is not None:
        device = next(gan_prev.generator.parameters()).device

    real_idx = (~synthetic).nonzero(as_tuple=True)[0]
    pools = {c: (task_data.labels == c).nonzero(as_tuple=True)[0] for c in current}
    picks = []
    for i in real_idx.tolist():
        pool = pools[int(labels[i])]
        picks.append(int(pool[int(torch.randint(0, len(pool), (1,), generator=generator))]))
    real = to_generator_range(task_data.images[picks].permute(0, 3, 1, 2)).to(device)
    if encode is not None and picks:
        real = encode(real)

    if not bool(synthetic.any()):
        return SurrogateBatch(samples=real, labels=labels.to(device), synthetic=synthetic.to(device))

    if gan_prev is None or gan_prev.frozen_prev_generator is None:
        raise StateError(f"task {n} surrogate batch needs a frozen previous generator", details={"task": n})
    syn_idx = synthetic.nonzero(as_tuple=True)[0]
    z = torch.randn(len(syn_idx), z_dim, generator=generator).to(device)
    with torch.no_grad():
        fake = gan_prev.frozen_prev_generator(z, labels[syn_idx].to(device), noise_mode="random")

    samples = torch.empty((batch_size, *fake.shape[1:]), dtype=fake.dtype, device=device)
    samples[syn_idx.to(device)] = fake
    if picks:
        samples[real_idx.to(device)] = real.to(fake.dtype)
    return SurrogateBatch(samples=samples, labels=labels.to(device), synthetic=synthetic.to(device))


class _MatchingSpace:
    """Maps generator-space samples to what the discriminator consumes."""

    def __init__(self, mode: MatchingMode, classifier: Classifier, normalizer: Normalizer, ada: AdaPipeline) -> None:
        self.mode = mode
        self.classifier = classifier
        self.normalizer = normalizer
        self.ada = ada

    def encode_real(self, images: torch.Tensor) -> torch.Tensor:
        """DFM only: real images -> tap features."""
        with torch.no_grad():
            return self.classifier.extract_features(self.normalizer.generated(images))

    def __call__(self, samples: torch.Tensor, side: Side, step: int, rng: torch.Generator) -> torch.Tensor:
        if self.mode == MatchingMode.DFM:
            return samples
        augmented = self.ada(samples, side, step, rng)
        if self.mode == MatchingMode.IM:
            return augmented
        return self.classifier.extract_features(self.normalizer.generated(augmented))


def _uniform_labels(classes: tuple[int, ...], count: int, rng: torch.Generator, device: torch.device) -> torch.Tensor:
    pool = torch.tensor(classes, dtype=torch.long)
    return pool[torch.randint(0, len(pool), (count,), generator=rng)].to(device)


def train_gan_task(
    gan: GanState,
    classifier: Classifier,
    task_data: DatasetIndex,
    seq: TaskSequence,
    task: int,
    config: ExperimentConfig,
    normalizer: Normalizer,
    seed: int,
    audit: ModelAudit | None = None,
) -> tuple[GanState, GanPhaseRecord]:
    """Train the GAN on task ``task`` until the image budget is consumed.

    The classifier is frozen for the whole phase; its tap features define the
    matching space in IFM and DFM. From task 2 on the averaged generator of the
    previous task is snapshotted first and serves both as the source of
    previous-class surrogate samples and as the generator-distillation target.

    Raises:
        ShapeError: If the classifier's tap shape does not match the discriminator
        StateError: If the classifier or the frozen generator changed during the phase
    """
    r = config.replay
    mode = gan.mode
    image_size = config.dataset.image_size
    if mode != MatchingMode.IM and classifier.feature_shape(image_size) != gan.discriminator.feature_shape:
        raise ShapeError(
            f"classifier tap shape {classifier.feature_shape(image_size)} does not match "
            f"discriminator input {gan.discriminator.feature_shape}",
        )

    if task >= 2:
        freeze_previous(gan)
    if audit is not None:
        audit.observe(classifiers=1, gan=gan)

    grad_flags = [p.requires_grad for p in classifier.parameters()]
    classifier.eval().requires_grad_(False)
    classifier_print = parameter_fingerprint(classifier) if r.check_invariants else None
    prev_print = (
        parameter_fingerprint(gan.frozen_prev_generator)
        if r.check_invariants and gan.frozen_prev_generator is not None
        else None
    )

    ada = AdaPipeline.from_config(config.augmentation, p=gan.ada_probability, enabled=mode != MatchingMode.DFM)
    controller = AdaController(ada, config.augmentation)
    space = _MatchingSpace(mode, classifier, normalizer, ada)
    encode = space.encode_real if mode == MatchingMode.DFM else None

    all_classes = seq.classes_up_to(task)
    prev_classes = seq.previous_classes(task)
    k = kappa(len(prev_classes), len(seq.classes(task)))
    budget = r.gan_budget(len(seq.classes(task)))
    device = next(gan.generator.parameters()).device
    rng = make_generator(derive_seed(seed, "gan", task))
    z_dim = config.generator.z_dim

    opt_g = Adam(gan.generator.parameters(), lr=r.gan_learning_rate, betas=r.gan_betas)
    opt_d = Adam(gan.discriminator.parameters(), lr=r.gan_learning_rate, betas=r.gan_betas)
    gan.generator.train()
    gan.discriminator.train()

    record = GanPhaseRecord(images_seen=0, d_steps=0, g_steps=0, r1_evaluations=0)
    window: dict[str, list[float]] = {"d": [], "g": [], "gd": []}
    logger.info(
        f"GAN phase: task={task}, mode={mode}, budget={budget}, kappa={k:.3f}, "
        f"ada_p={ada.p:.4f}, ada_enabled={ada.enabled}"
    )

    while record.images_seen < budget:
        # discriminator step
        record.d_steps += 1
        step = record.d_steps
        surrogate = build_surrogate_batch(
            task_data, gan, seq, task, r.gan_batch_size, rng, z_dim, encode=encode
        )
        y_fake = _uniform_labels(all_classes, r.gan_batch_size, rng, device)
        z = torch.randn(r.gan_batch_size, z_dim, generator=rng).to(device)
        with torch.no_grad():
            fake = gan.generator(z, y_fake, noise_mode="random")

        real_in = space(surrogate.samples, "real", step, rng).detach()
        fake_in = space(fake, "fake", step, rng).detach()
        real_scores = gan.discriminator(real_in, surrogate.labels)
        fake_scores = gan.discriminator(fake_in, y_fake)

        r1: torch.Tensor | float = 0.0
        if step % r.lazy_r1_interval == 0:
            r1 = r1_penalty(gan.discriminator, real_in, surrogate.labels, r.r1_gamma) * r.lazy_r1_interval
            record.r1_evaluations += 1
            logger.debug(f"Lazy R1: task={task}, d_step={step}, r1={float(r1):.5f}")

        loss_d = discriminator_loss(fake_scores, real_scores, r1)
        opt_d.zero_grad(set_to_none=True)
        loss_d.backward()
        opt_d.step()
        controller.observe(real_scores)
        record.images_seen += r.gan_batch_size
        window["d"].append(float(loss_d))

        # generator step
        if step % r.d_steps_per_g_step == 0:
            gan.discriminator.requires_grad_(False)
            y = _uniform_labels(all_classes, r.gan_batch_size, rng, device)
            z = torch.randn(r.gan_batch_size, z_dim, generator=rng).to(device)
            fake_scores = gan.discriminator(space(gan.generator(z, y, noise_mode="random"), "fake", step, rng), y)
            gan_term = generator_gan_loss(fake_scores)

            gd_term: torch.Tensor | float = 0.0
            if k > 0 and gan.frozen_prev_generator is not None:
                y_prev = _uniform_labels(prev_classes, r.gan_batch_size, rng, device)
                z_prev = torch.randn(r.gan_batch_size, z_dim, generator=rng).to(device)
                with torch.no_grad():
                    old = gan.frozen_prev_generator(z_prev, y_prev, noise_mode="const")
                gd_term = generator_distillation_loss(gan.generator(z_prev, y_prev, noise_mode="const"), old)
                window["gd"].append(float(gd_term))

            loss_g = generator_loss(gan_term, gd_term, r.lambda_gd, k)
            opt_g.zero_grad(set_to_none=True)
            loss_g.backward()  # type: ignore[union-attr]
            opt_g.step()
            gan.discriminator.requires_grad_(True)
            ema_update(gan, r.ema_decay)
            record.g_steps += 1
            window["g"].append(float(loss_g))

        if step % LOG_WINDOW == 0:
            _flush(window, record)
            logger.debug(
                f"GAN progress: task={task}, images={record.images_seen}/{budget}, "
                f"d_loss={record.d_loss[-1]:.4f}, p={ada.p:.4f}"
            )

    _flush(window, record)
    for p, flag in zip(classifier.parameters(), grad_flags, strict=True):
        p.requires_grad_(flag)

    if classifier_print is not None and parameter_fingerprint(classifier) != classifier_print:
        raise StateError("classifier changed during the GAN phase", details={"task": task})
    frozen = gan.frozen_prev_generator
    if prev_print is not None and frozen is not None and parameter_fingerprint(frozen) != prev_print:
        raise StateError("frozen previous generator changed during the GAN phase", details={"task": task})

    gan.ada_probability = ada.p
    gan.trained_classes = list(all_classes)
    record.p_trace = controller.trace
    record.ada_p_final = ada.p
    logger.info(
        f"GAN phase done: task={task}, d_steps={record.d_steps}, g_steps={record.g_steps}, "
        f"r1_evaluations={record.r1_evaluations}, ada_p={ada.p:.4f}"
    )
    return gan, record


def _flush(window: dict[str, list[float]], record: GanPhaseRecord) -> None:
    if window["d"]:
        record.d_loss.append(float(np.mean(window["d"])))
    if window["g"]:
        record.g_loss.append(float(np.mean(window["g"])))
    if window["gd"]:
        record.gd_loss.append(float(np.mean(window["gd"])))
    for values in window.values():
        values.clear()
