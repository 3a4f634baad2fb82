"""Application types, container demands and the mixed workload generator."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from .resources import ConfigError, ResourceVector

BLOCK_MB = 128
UNBOUNDED = math.inf


class AppType(enum.Enum):
    TWO_STAGE = "two_stage"
    DAG = "dag"
    DCG = "dcg"
    STREAMING = "streaming"


STREAMING_TASK_VCORES = 2

_DEMANDS = {
    AppType.TWO_STAGE: (ResourceVector(1, 2048), ResourceVector(1, 1024)),
    AppType.DAG: (ResourceVector(1, 1024), ResourceVector(1, 2048)),
    AppType.DCG: (ResourceVector(1, 1024), ResourceVector(1, 2048)),
    AppType.STREAMING: (ResourceVector(1, 1024), ResourceVector(STREAMING_TASK_VCORES, 2048)),
}


def demands_for(app_type: AppType) -> tuple[ResourceVector, ResourceVector]:
    """(AM demand, per-task demand) for an application type."""
    return _DEMANDS[app_type]


def two_stage_task_count(data_size_mb: int) -> int:
    if data_size_mb <= 0:
        raise ConfigError(f"data size must be positive, got {data_size_mb}")
    return -(-data_size_mb // BLOCK_MB)


@dataclass(frozen=True)
class AppSpec:
    app_id: str
    app_type: AppType
    benchmark_name: str
    submission_time: float
    am_demand: ResourceVector
    task_demand: ResourceVector
    task_count: int
    data_size_mb: int = 0
    task_vcores_override: int | None = None

    def __post_init__(self) -> None:
        if self.task_count < 1:
            raise ConfigError(f"{self.app_id}: task_count must be positive")
        if self.submission_time < 0:
            raise ConfigError(f"{self.app_id}: negative submission time")

    @property
    def is_streaming(self) -> bool:
        return self.app_type is AppType.STREAMING

    @property
    def container_count(self) -> int:
        return 1 + self.task_count


def make_app(
    app_id: str,
    app_type: AppType,
    benchmark: str,
    submission_time: float,
    data_size_mb: int = 0,
    demands: dict[AppType, tuple[ResourceVector, ResourceVector]] | None = None,
) -> AppSpec:
    am, task = (demands or _DEMANDS)[app_type]
    if app_type is AppType.TWO_STAGE:
        count = two_stage_task_count(data_size_mb)
    else:
        data_size_mb = 0
        count = 2
    override = task.vcores if app_type is AppType.STREAMING else None
    return AppSpec(
        app_id=app_id,
        app_type=app_type,
        benchmark_name=benchmark,
        submission_time=submission_time,
        am_demand=am,
        task_demand=task,
        task_count=count,
        data_size_mb=data_size_mb,
        task_vcores_override=override,
    )


def _default_two_stage():
    return {"wordcount": 5, "sort": 3, "grep": 8, "wordmean": 6, "wordstandarddeviation": 15}


@dataclass
class WorkloadSpec:
    """Benchmark mix per type plus the arrival process.

    ``two_stage_sizes`` maps data size (MiB) to how many two-stage apps get it;
    its counts must add up to the number of two-stage benchmarks.
    """

    two_stage_benchmarks: dict[str, int] = field(default_factory=_default_two_stage)
    two_stage_sizes: dict[int, int] = field(default_factory=lambda: {1024: 24, 5120: 11, 10240: 2})
    dag_benchmarks: dict[str, int] = field(
        default_factory=lambda: {"JavaHdfsLR": 9, "JavaKMeans": 9, "JavaPageRank": 10}
    )
    dcg_benchmarks: dict[str, int] = field(default_factory=lambda: {"LiveJournalPageRank": 28})
    streaming_benchmarks: dict[str, int] = field(default_factory=lambda: {"JavaQueueStream": 1})
    mean_interval_s: float = 32.11
    seed: int = 1
    demands: dict[AppType, tuple[ResourceVector, ResourceVector]] = field(
        default_factory=lambda: dict(_DEMANDS)
    )

    def benchmarks(self, app_type: AppType) -> dict[str, int]:
        return {
            AppType.TWO_STAGE: self.two_stage_benchmarks,
            AppType.DAG: self.dag_benchmarks,
            AppType.DCG: self.dcg_benchmarks,
            AppType.STREAMING: self.streaming_benchmarks,
        }[app_type]

    def count(self, app_type: AppType) -> int:
        return sum(self.benchmarks(app_type).values())

    @property
    def total_apps(self) -> int:
        return sum(self.count(t) for t in AppType)

    def validate(self) -> None:
        for t in AppType:
            for name, n in self.benchmarks(t).items():
                if n < 0:
                    raise ConfigError(f"negative count for benchmark {name!r}")
        if self.mean_interval_s <= 0:
            raise ConfigError("mean_interval_s must be positive")
        if any(n < 0 for n in self.two_stage_sizes.values()):
            raise ConfigError("negative count in two_stage_sizes")
        if any(size <= 0 for size in self.two_stage_sizes):
            raise ConfigError("two-stage data sizes must be positive")
        if sum(self.two_stage_sizes.values()) != self.count(AppType.TWO_STAGE):
            raise ConfigError(
                f"two_stage_sizes cover {sum(self.two_stage_sizes.values())} apps but the "
                f"two-stage benchmark mix has {self.count(AppType.TWO_STAGE)}"
            )
        if self.count(AppType.STREAMING) > 1:
            raise ConfigError("at most one streaming application is supported")


def generate_workload(spec: WorkloadSpec) -> list[AppSpec]:
    """Build the seeded mixed workload, sorted by submission time.

    The streaming application (if any) is submitted at t=0. All other
    applications arrive by a Poisson process in a shuffled order.
    """
    spec.validate()
    rng = random.Random(spec.seed)

    batch = []
    for t in (AppType.TWO_STAGE, AppType.DAG, AppType.DCG):
        for name, n in spec.benchmarks(t).items():
            batch.extend((t, name) for _ in range(n))

    # draw gaps before anything else so arrival times depend only on seed and count
    times = []
    now = 0.0
    for _ in batch:
        now += rng.expovariate(1.0 / spec.mean_interval_s)
        times.append(now)

    sizes = [size for size, n in spec.two_stage_sizes.items() for _ in range(n)]
    rng.shuffle(sizes)
    rng.shuffle(batch)

    entries = []
    for name, n in spec.streaming_benchmarks.items():
        entries.extend((0.0, AppType.STREAMING, name, 0) for _ in range(n))
    size_iter = iter(sizes)
    for when, (t, name) in zip(times, batch):
        size = next(size_iter) if t is AppType.TWO_STAGE else 0
        entries.append((when, t, name, size))

    entries.sort(key=lambda e: e[0])
    return [
        make_app(f"app_{i:04d}", t, name, when, size, spec.demands)
        for i, (when, t, name, size) in enumerate(entries)
    ]


@dataclass
class DurationModel:
    two_stage_base_s: float = 10.0
    two_stage_rate_s_per_mb: float = 0.1
    dag_base_s: float = 60.0
    dcg_base_s: float = 90.0
    stream_service_s: float = 2.0
    stream_interval_s: float = 5.0
    noise: float = 0.0

    def validate(self) -> None:
        for name in ("two_stage_base_s", "dag_base_s", "dcg_base_s", "stream_service_s", "stream_interval_s"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.two_stage_rate_s_per_mb < 0:
            raise ConfigError("two_stage_rate_s_per_mb must be non-negative")
        if not 0 <= self.noise < 1:
            raise ConfigError("noise must lie in [0, 1)")


def sample_task_duration(app: AppSpec, task_index: int, model: DurationModel, rng: random.Random) -> float:
    """Service time of one task; streaming tasks never finish.

    One uniform draw is consumed per finite task regardless of the noise
    level, so changing ``noise`` never shifts later draws.
    """
    if app.app_type is AppType.STREAMING:
        return UNBOUNDED
    if app.app_type is AppType.TWO_STAGE:
        base = model.two_stage_base_s + model.two_stage_rate_s_per_mb * (app.data_size_mb / app.task_count)
    elif app.app_type is AppType.DAG:
        base = model.dag_base_s
    else:
        base = model.dcg_base_s
    u = rng.uniform(-1.0, 1.0)
    if model.noise == 0:
        return base
    return base * (1.0 + model.noise * u)


TABLE_HEADER = ("app_id", "type", "benchmark", "data_size_mb", "submission_time")


def dump_workload(apps: list[AppSpec], path: str | Path) -> None:
    lines = ["\t".join(TABLE_HEADER)]
    for a in apps:
        lines.append(
            f"{a.app_id}\t{a.app_type.value}\t{a.benchmark_name}\t{a.data_size_mb}\t{a.submission_time!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def load_workload(
    path: str | Path, demands: dict[AppType, tuple[ResourceVector, ResourceVector]] | None = None
) -> list[AppSpec]:
    apps = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if tuple(cols) == TABLE_HEADER:
            continue
        if len(cols) != len(TABLE_HEADER):
            raise ConfigError(f"{path}:{lineno}: expected {len(TABLE_HEADER)} tab-separated columns")
        app_id, kind, bench, size, when = cols
        try:
            apps.append(make_app(app_id, AppType(kind), bench, float(when), int(size), demands))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    apps.sort(key=lambda a: (a.submission_time, a.app_id))
    return apps
