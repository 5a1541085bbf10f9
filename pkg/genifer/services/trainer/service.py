"""Continual training loop: classifier phase then GAN phase for every task."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import torch

from genifer.config import Settings, get_settings
from genifer.core.exceptions import ConfigurationError, StateError
from genifer.core.seeding import derive_seed, make_generator, seed_everything
from genifer.schemas.experiment import ExperimentConfig, MatchingMode, config_hash
from genifer.schemas.records import GanPhaseRecord, RunRecord, TaskRecord
from genifer.services.adaptive.coefficient import AdaptiveCoefState
from genifer.services.data.dataset import DatasetIndex, subset
from genifer.services.data.source import load_dataset_pair
from genifer.services.data.tasks import Normalizer, TaskSequence, build_task_sequence
from genifer.services.models.checkpoint import load_checkpoint, save_checkpoint
from genifer.services.models.classifier import Classifier, build_classifier
from genifer.services.models.gan import GanState, build_gan
from genifer.services.reports.export import append_metric_records, write_metric_records, write_run_record
from genifer.services.reports.metrics import average_incremental_accuracy, overall_accuracy, task_accuracies
from genifer.services.reports.plots import sample_grid
from genifer.services.reports.service import emit_report
from genifer.services.trainer.audit import ModelAudit
from genifer.services.trainer.classifier_phase import train_classifier_task
from genifer.services.trainer.gan_phase import train_gan_task

logger = logging.getLogger(__name__)

LATEST_CHECKPOINT = "latest.pt"
RUN_RECORD_NAME = "run_record.json"
METRICS_NAME = "metrics.jsonl"
SAMPLES_DIR = "samples"

ABLATION_ARMS = ("ifm", "dfm", "im", "ifm_no_ca", "ifm_no_ada", "constant_lambda", "no_replay")


def arm_config(config: ExperimentConfig, arm: str) -> ExperimentConfig:
    """Return ``config`` modified for one ablation arm.

    Raises:
        ConfigurationError: If the arm name is unknown
    """
    replay, aug, adaptive = config.replay, config.augmentation, config.adaptive
    match arm:
        case "ifm" | "dfm" | "im":
            replay = replay.model_copy(update={"mode": MatchingMode(arm)})
        case "ifm_no_ca":
            replay = replay.model_copy(update={"mode": MatchingMode.IFM})
            aug = aug.model_copy(update={"augment_synthetic": False})
        case "ifm_no_ada":
            replay = replay.model_copy(update={"mode": MatchingMode.IFM})
            aug = aug.model_copy(update={"ada_enabled": False})
        case "constant_lambda":
            replay = replay.model_copy(update={"mode": MatchingMode.IFM})
            adaptive = adaptive.model_copy(update={"adaptive": False})
        case "no_replay":
            replay = replay.model_copy(update={"batch_ratio": 0.0})
        case _:
            raise ConfigurationError(f"Unknown ablation arm: {arm}", details={"known": list(ABLATION_ARMS)})
    return config.model_copy(update={"replay": replay, "augmentation": aug, "adaptive": adaptive})


def _gan_to(gan: GanState, device: str) -> GanState:
    for module in (gan.generator, gan.discriminator, gan.ema_generator, gan.frozen_prev_generator):
        if module is not None:
            module.to(device)
    return gan


class ContinualTrainer:
    """Runs one class-incremental sequence and keeps its record.

    At most one previous copy of each model kind is held: the distillation
    teacher lives only inside the classifier phase, and the frozen previous
    generator is replaced at the start of every GAN phase.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        output_dir: Path | None = None,
        run_id: str | None = None,
        label: str | None = None,
        data: tuple[DatasetIndex, DatasetIndex] | None = None,
        settings: Settings | None = None,
    ) -> None:
        """Initialize with an experiment config and an optional output directory."""
        self.config = config
        self.settings = settings or get_settings()
        self.output_dir = output_dir
        self.label = label or str(config.replay.mode)
        self.run_id = run_id or f"{config.name}-{self.label}-s{config.seed}"
        self.device = self.settings.resolved_device
        self.config_hash = config_hash(config)
        self.normalizer = Normalizer(tuple(config.dataset.mean), tuple(config.dataset.std))
        self.audit = ModelAudit()
        self._data = data

        self.train_data: DatasetIndex | None = None
        self.test_data: DatasetIndex | None = None
        self.sequence: TaskSequence | None = None
        self.classifier: Classifier | None = None
        self.gan: GanState | None = None
        self.adaptive = AdaptiveCoefState.from_config(config.adaptive)

    @property
    def checkpoint_dir(self) -> Path | None:
        return self.output_dir / "checkpoints" if self.output_dir else None

    @property
    def replay_enabled(self) -> bool:
        return self.config.replay.batch_ratio > 0

    def _setup(self) -> None:
        seed_everything(self.config.seed, self.settings.deterministic)
        if self.settings.num_threads > 0:
            torch.set_num_threads(self.settings.num_threads)
        self.train_data, self.test_data = self._data or load_dataset_pair(self.config.dataset, self.settings.data_root)
        s = self.config.split
        self.sequence = build_task_sequence(self.train_data, s.first_task_size, s.classes_per_task, s.seed)
        c = self.config.classifier
        self.classifier = build_classifier(
            self.config.dataset.channels,
            c.widths,
            c.tap_point,
            c.head_init,
            c.head_init_std,
            c.pretrained_weights,
        ).to(self.device)
        self.gan = None
        self.adaptive = AdaptiveCoefState.from_config(self.config.adaptive)

    def _new_record(self) -> RunRecord:
        return RunRecord(
            run_id=self.run_id,
            mode=self.label,
            seed=self.config.seed,
            split_seed=self.config.split.seed,
            config_hash=self.config_hash,
            first_task_size=self.config.split.first_task_size,
            classes_per_task=self.config.split.classes_per_task,
        )

    def _checkpoint(self, record: RunRecord, task: int, phase: str, done: bool) -> None:
        if self.checkpoint_dir is None:
            return
        assert self.classifier is not None
        meta: dict[str, Any] = {
            "task": task,
            "phase": phase,
            "task_done": done,
            "config_hash": self.config_hash,
            "lambda_od": self.adaptive.lambda_od,
            "record": record.model_dump(mode="json"),
        }
        path = self.checkpoint_dir / f"task{task:02d}_{phase}.pt"
        save_checkpoint(path, self.classifier, self.gan, meta)
        save_checkpoint(self.checkpoint_dir / LATEST_CHECKPOINT, self.classifier, self.gan, meta)

    def _resume(self) -> tuple[RunRecord, int, bool]:
        """Restore state from the latest checkpoint.

        ``metrics.jsonl`` is rewritten from the completed tasks of the restored record.

        Returns:
            (record so far, task to continue with, whether its classifier phase is done)
        """
        assert self.checkpoint_dir is not None and self.output_dir is not None
        bundle = load_checkpoint(self.checkpoint_dir / LATEST_CHECKPOINT, map_location=self.device)
        saved_hash = bundle.meta.get("config_hash")
        if saved_hash != self.config_hash:
            raise ConfigurationError(
                "Cannot resume: checkpoint was written with a different config",
                details={"checkpoint_hash": saved_hash, "config_hash": self.config_hash},
            )
        self.classifier = bundle.classifier.to(self.device)
        self.gan = _gan_to(bundle.gan, self.device) if bundle.gan is not None else None
        self.adaptive.lambda_od = float(bundle.meta["lambda_od"])
        if bundle.rng_state is not None:
            torch.set_rng_state(bundle.rng_state)
        record = RunRecord.model_validate(bundle.meta["record"])
        task, phase = int(bundle.meta["task"]), bundle.meta["phase"]
        done = bool(bundle.meta.get("task_done", phase == "gan"))
        completed = record.metric_records() if done else record.metric_records()[:-1]
        write_metric_records(completed, self.output_dir / METRICS_NAME)
        logger.info(f"Resuming run: run_id={self.run_id}, task={task}, phase={phase}, task_done={done}")
        if done:
            return record, task + 1, False
        return record, task, True

    def _gan_due(self, t: int) -> bool:
        assert self.sequence is not None
        return self.replay_enabled and (t < self.sequence.num_tasks or self.config.replay.train_final_gan)

    def _finish_task(self, record: RunRecord, task_record: TaskRecord, started: float) -> None:
        task_record.wall_seconds += time.perf_counter() - started
        if self.output_dir is not None:
            append_metric_records(self.output_dir / METRICS_NAME, [record.metric_records()[-1]])
        logger.info(
            f"Task done: run_id={self.run_id}, task={task_record.task}, alpha_all_t={task_record.alpha_all_t:.4f}, "
            f"seconds={task_record.wall_seconds:.1f}"
        )

    def _write_samples(self, t: int) -> None:
        per_class = self.config.replay.sample_grid_per_class
        if self.output_dir is None or self.gan is None or self.gan.mode == MatchingMode.DFM or per_class == 0:
            return
        assert self.sequence is not None
        sample_grid(
            self.gan,
            list(self.sequence.classes_up_to(t)),
            per_class,
            self.output_dir / SAMPLES_DIR / f"task{t:02d}.png",
            seed=derive_seed(self.config.seed, "samples"),
        )

    def run(self, resume: bool = False) -> RunRecord:
        """Train every task and return the run record.

        Args:
            resume: Continue from the latest checkpoint in ``output_dir``

        Raises:
            ConfigurationError: If resuming with a config whose hash differs
        """
        self._setup()
        assert self.sequence is not None and self.train_data is not None and self.test_data is not None
        seq = self.sequence
        record = self._new_record()
        start, classifier_done = 1, False
        if resume and self.checkpoint_dir is not None and (self.checkpoint_dir / LATEST_CHECKPOINT).exists():
            record, start, classifier_done = self._resume()
        elif self.output_dir is not None:
            (self.output_dir / METRICS_NAME).unlink(missing_ok=True)

        logger.info(
            f"Starting run: run_id={self.run_id}, mode={self.label}, tasks={seq.num_tasks}, "
            f"device={self.device}, config_hash={self.config_hash[:12]}"
        )
        for t in range(start, seq.num_tasks + 1):
            started = time.perf_counter()
            task_data = subset(self.train_data, seq.classes(t))
            gan_due = self._gan_due(t)

            if not (t == start and classifier_done):
                task_record = self._classifier_phase(t, task_data)
                record.tasks.append(task_record)
                if not gan_due:
                    self._finish_task(record, task_record, started)
                self._checkpoint(record, t, "classifier", done=not gan_due)
            task_record = record.tasks[-1]

            if gan_due:
                task_record.gan = self._gan_phase(t, task_data)
                self._write_samples(t)
                self._finish_task(record, task_record, started)
                self._checkpoint(record, t, "gan", done=True)

        if seq.num_tasks >= 2:
            record.alpha_all = average_incremental_accuracy(record.accuracy_trace)
        if self.config.replay.check_invariants and not self.audit.within_limits():
            raise StateError("more model copies held than allowed", details=self.audit.as_dict())
        if self.output_dir is not None:
            write_run_record(record, self.output_dir / RUN_RECORD_NAME)
        logger.info(f"Run finished: run_id={self.run_id}, alpha_all={record.alpha_all}")
        return record

    def _classifier_phase(self, t: int, task_data: DatasetIndex) -> TaskRecord:
        assert self.classifier is not None and self.sequence is not None and self.test_data is not None
        self.adaptive.reset_window()
        self.classifier, phase_record = train_classifier_task(
            self.classifier,
            self.gan,
            task_data,
            self.sequence,
            t,
            self.config,
            self.normalizer,
            self.adaptive,
            self.config.seed,
            audit=self.audit,
        )
        seen_test = subset(self.test_data, self.sequence.classes_up_to(t))
        return TaskRecord(
            task=t,
            classes=list(self.sequence.classes(t)),
            alpha_all_t=overall_accuracy(self.classifier, seen_test, self.normalizer),
            task_accuracies=task_accuracies(self.classifier, self.test_data, self.sequence, t, self.normalizer),
            classifier=phase_record,
        )

    def _gan_phase(self, t: int, task_data: DatasetIndex) -> GanPhaseRecord:
        assert self.classifier is not None and self.sequence is not None and self.train_data is not None
        if self.gan is None:
            self.gan = build_gan(self.config, self.classifier, self.train_data.class_count)
        elif t >= 2:
            logger.info(f"Carrying ADA probability into task {t}: p={self.gan.ada_probability:.4f}")
        self.gan, phase_record = train_gan_task(
            self.gan,
            self.classifier,
            task_data,
            self.sequence,
            t,
            self.config,
            self.normalizer,
            self.config.seed,
            audit=self.audit,
        )
        return phase_record


def run_sequence(
    config: ExperimentConfig,
    output_dir: Path | None = None,
    resume: bool = False,
    label: str | None = None,
    data: tuple[DatasetIndex, DatasetIndex] | None = None,
) -> RunRecord:
    """Run the full continual sequence for one config."""
    return ContinualTrainer(config, output_dir=output_dir, label=label, data=data).run(resume=resume)


def _run_arm(args: tuple[ExperimentConfig, str, Path | None]) -> RunRecord:
    config, arm, output_dir = args
    return run_sequence(arm_config(config, arm), output_dir=output_dir, label=arm)


def run_ablation(
    config: ExperimentConfig,
    modes: list[str],
    seeds: list[int] | None = None,
    output_dir: Path | None = None,
    workers: int = 1,
) -> list[RunRecord]:
    """Run every arm over shared seeds and task streams.

    Args:
        config: Base config
        modes: Arm names from ``ABLATION_ARMS``
        seeds: Run seeds (defaults to the config's seed)
        output_dir: Parent directory; each arm/seed gets its own subdirectory
        workers: Parallel processes (1 runs in-process)

    Returns:
        RunRecords ordered by (mode, seed)

    Raises:
        ConfigurationError: If a mode name is unknown
    """
    unknown = [m for m in modes if m not in ABLATION_ARMS]
    if unknown:
        raise ConfigurationError(f"Unknown ablation arms: {unknown}", details={"known": list(ABLATION_ARMS)})
    seeds = seeds or [config.seed]
    jobs = [
        (
            config.model_copy(update={"seed": seed}),
            arm,
            output_dir / f"{arm}-s{seed}" if output_dir else None,
        )
        for arm in modes
        for seed in seeds
    ]
    logger.info(f"Starting ablation: arms={modes}, seeds={seeds}, workers={workers}")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_arm, jobs))
    else:
        records = [_run_arm(job) for job in jobs]

    if output_dir is not None:
        emit_report(records, output_dir / "report")
    return records


def evaluate_checkpoint(path: Path, config: ExperimentConfig) -> dict[str, Any]:
    """Recompute alpha_all,t and per-task accuracies from a checkpoint.

    Raises:
        CheckpointError: If the checkpoint cannot be read
    """
    bundle = load_checkpoint(path)
    train, test = load_dataset_pair(config.dataset, get_settings().data_root)
    s = config.split
    seq = build_task_sequence(train, s.first_task_size, s.classes_per_task, s.seed)
    task = int(bundle.meta.get("task", seq.num_tasks))
    normalizer = Normalizer(tuple(config.dataset.mean), tuple(config.dataset.std))
    seen_test = subset(test, seq.classes_up_to(task))
    return {
        "task": task,
        "alpha_all_t": overall_accuracy(bundle.classifier, seen_test, normalizer),
        "task_accuracies": task_accuracies(bundle.classifier, test, seq, task, normalizer),
    }


@torch.no_grad()
def generator_retention(gan: GanState, classes: tuple[int, ...], z_dim: int, samples: int, seed: int) -> float:
    """Mean |G_n - G_{n-1}| over shared (z, y) on ``classes``, in the generator range.

    Raises:
        StateError: If no frozen previous generator exists
    """
    if gan.frozen_prev_generator is None:
        raise StateError("generator retention needs a frozen previous generator")
    device = next(gan.ema_generator.parameters()).device
    rng = make_generator(derive_seed(seed, "retention"))
    pool = torch.tensor(classes, dtype=torch.long)
    y = pool[torch.randint(0, len(pool), (samples,), generator=rng)].to(device)
    z = torch.randn(samples, z_dim, generator=rng).to(device)
    new = gan.ema_generator(z, y, noise_mode="const")
    old = gan.frozen_prev_generator(z, y, noise_mode="const")
    return float((new - old).abs().mean())
