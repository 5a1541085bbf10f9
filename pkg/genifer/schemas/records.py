"""Pydantic schemas for run records and metric records."""

from pydantic import BaseModel, Field, field_validator

METRIC_SCHEMA_VERSION = 1
RUN_RECORD_SCHEMA_VERSION = 1


class LambdaUpdate(BaseModel):
    """One lambda_OD controller update."""

    batch: int
    rho: float
    lambda_od: float


class AdaUpdate(BaseModel):
    """One ADA probability update."""

    d_step: int
    signal: float
    p: float


class ClassifierPhaseRecord(BaseModel):
    """Traces of one classifier phase."""

    epochs: int
    batches: int
    curr_loss: list[float] = Field(default_factory=list, description="Mean L_curr per epoch")
    od_loss: list[float] = Field(default_factory=list, description="Mean L_OD per epoch (empty for task 1)")
    lambda_trace: list[LambdaUpdate] = Field(default_factory=list)
    lambda_od_final: float | None = None


class GanPhaseRecord(BaseModel):
    """Traces of one GAN phase."""

    images_seen: int
    d_steps: int
    g_steps: int
    r1_evaluations: int
    d_loss: list[float] = Field(default_factory=list, description="Mean D loss per logging window")
    g_loss: list[float] = Field(default_factory=list, description="Mean G loss per logging window")
    gd_loss: list[float] = Field(default_factory=list, description="Mean L_GD per logging window")
    p_trace: list[AdaUpdate] = Field(default_factory=list)
    ada_p_final: float = 0.0


class TaskRecord(BaseModel):
    """Everything recorded for one task of a run."""

    task: int
    classes: list[int]
    alpha_all_t: float = Field(ge=0.0, le=1.0)
    task_accuracies: dict[int, float] = Field(
        default_factory=dict, description="Accuracy on each seen task's test classes (joint head)"
    )
    classifier: ClassifierPhaseRecord
    gan: GanPhaseRecord | None = None
    wall_seconds: float = 0.0

    @property
    def lambda_od_final(self) -> float | None:
        return self.classifier.lambda_od_final

    @property
    def ada_p_final(self) -> float | None:
        return self.gan.ada_p_final if self.gan else None


class RunRecord(BaseModel):
    """Per-run record persisted for reporting."""

    schema_version: int = RUN_RECORD_SCHEMA_VERSION
    run_id: str
    mode: str
    seed: int
    split_seed: int
    config_hash: str
    first_task_size: int
    classes_per_task: int
    tasks: list[TaskRecord] = Field(default_factory=list)
    alpha_all: float | None = None

    @property
    def accuracy_trace(self) -> list[float]:
        return [t.alpha_all_t for t in self.tasks]

    def metric_records(self) -> list["MetricRecord"]:
        """Flatten into one MetricRecord per task."""
        return [
            MetricRecord(
                run_id=self.run_id,
                mode=self.mode,
                task=t.task,
                alpha_all_t=t.alpha_all_t,
                lambda_od_final=t.lambda_od_final,
                ada_p_final=t.ada_p_final,
                wall_seconds=t.wall_seconds,
            )
            for t in self.tasks
        ]


class MetricRecord(BaseModel):
    """One structured metric line per (run, task)."""

    schema_version: int = METRIC_SCHEMA_VERSION
    run_id: str
    mode: str
    task: int
    alpha_all_t: float
    lambda_od_final: float | None
    ada_p_final: float | None
    wall_seconds: float


class AccuracyTrace(BaseModel):
    """Overall accuracies alpha_all,t for t = 1..T."""

    values: list[float]

    @field_validator("values")
    @classmethod
    def _in_unit_interval(cls, v: list[float]) -> list[float]:
        for a in v:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"accuracy {a} outside [0, 1]")
        return v

    @property
    def num_tasks(self) -> int:
        return len(self.values)
