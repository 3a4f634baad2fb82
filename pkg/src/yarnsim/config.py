"""Run configuration: INI-style text file <-> validated :class:`RunConfig`.

Sections and keys (all optional; missing keys take the defaults in paper.conf)::

    [cluster]    nodes, node_vcores, node_memory_mb, min_allocation_vcores,
                 max_allocation_vcores, min_allocation_mb, max_allocation_mb
    [queues]     scenario = one_queue | separate_queue | merged_queue | custom
                 underserved_metric = relative | absolute
    [queue:NAME] min, max (percent "25%", decimal or ratio "1/4"),
                 types (comma list of app types), parent   -- custom only
    [workload]   mean_interval_s, two_stage_benchmarks, two_stage_sizes_mb,
                 dag_benchmarks, dcg_benchmarks, streaming_benchmarks, replay
    [demands]    <type>_am, <type>_task as "vcores,memory_mb"
    [durations]  two_stage_base_s, two_stage_rate_s_per_mb, dag_base_s,
                 dcg_base_s, stream_service_s, stream_interval_s, noise
    [run]        spc, placement (auto | pack | spread), t_fail_s, seed,
                 min_duration_s, schedule_tick_s
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .engine import ClusterConfig
from .policies import PlacementPolicy, SpcKind
from .queues import QueueDef, ScenarioConfig, ScenarioKind
from .resources import ConfigError, ResourceVector
from .workload import AppSpec, AppType, DurationModel, WorkloadSpec, generate_workload, load_workload


@dataclass
class RunConfig:
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    spc: SpcKind = SpcKind.CAP_FIFO
    scenario: ScenarioConfig = field(default_factory=lambda: ScenarioConfig.named("one_queue"))
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    replay: str | None = None
    durations: DurationModel = field(default_factory=DurationModel)
    t_fail_s: float = 300.0
    seed: int = 1
    placement: PlacementPolicy | None = None
    underserved_metric: str = "relative"
    min_duration_s: float = 0.0
    schedule_tick_s: float = 1.0

    def with_overrides(self, seed=None, spc=None, scenario=None) -> RunConfig:
        cfg = dataclasses.replace(self)
        if seed is not None:
            cfg.seed = int(seed)
            cfg.workload = dataclasses.replace(self.workload, seed=int(seed))
        if spc is not None:
            cfg.spc = SpcKind(spc)
        if scenario is not None:
            cfg.scenario = ScenarioConfig.named(scenario)
        return cfg

    def apps(self) -> list[AppSpec]:
        if self.replay:
            return load_workload(self.replay, self.workload.demands)
        return generate_workload(self.workload)

    def sim_options(self) -> dict:
        return dict(
            placement=self.placement,
            t_fail_s=self.t_fail_s,
            underserved_metric=self.underserved_metric,
            min_duration_s=self.min_duration_s,
            schedule_tick_s=self.schedule_tick_s,
        )

    def validate(self) -> None:
        self.cluster.validate()
        self.scenario.validate()
        self.workload.validate()
        self.durations.validate()
        for t, (am, task) in self.workload.demands.items():
            self.cluster.check_demand(f"[demands] {t.value}_am", am)
            self.cluster.check_demand(f"[demands] {t.value}_task", task)
        if self.t_fail_s <= 0:
            raise ConfigError("[run] t_fail_s: must be positive")
        if self.schedule_tick_s <= 0:
            raise ConfigError("[run] schedule_tick_s: must be positive")
        if self.min_duration_s < 0:
            raise ConfigError("[run] min_duration_s: must be non-negative")
        if self.underserved_metric not in ("relative", "absolute"):
            raise ConfigError("[queues] underserved_metric: expected relative or absolute")


def default_config() -> RunConfig:
    return RunConfig()


# -- value codecs ------------------------------------------------------------

def _fraction(text: str) -> Fraction:
    text = text.strip()
    if text.endswith("%"):
        return Fraction(text[:-1].strip()) / 100
    return Fraction(text)


def _fraction_str(f: Fraction) -> str:
    pct = f * 100
    if pct.denominator == 1:
        return f"{pct.numerator}%"
    return str(f)


def _counts(text: str, key=str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, _, n = item.rpartition(":")
        if not name:
            raise ValueError(f"expected name:count, got {item!r}")
        out[key(name.strip())] = int(n)
    return out


def _counts_str(d: dict) -> str:
    return ", ".join(f"{k}:{v}" for k, v in d.items())


def _vector(text: str) -> ResourceVector:
    v, m = (int(x) for x in text.split(","))
    return ResourceVector(v, m)


def _vector_str(v: ResourceVector) -> str:
    return f"{v.vcores},{v.memory_mb}"


# -- parse / emit --------------------------------------------------------------

_CLUSTER_KEYS = {
    "nodes", "node_vcores", "node_memory_mb", "min_allocation_vcores",
    "max_allocation_vcores", "min_allocation_mb", "max_allocation_mb",
}
_DURATION_KEYS = {f.name for f in dataclasses.fields(DurationModel)}
_KNOWN = {
    "cluster": _CLUSTER_KEYS,
    "queues": {"scenario", "underserved_metric"},
    "workload": {
        "mean_interval_s", "two_stage_benchmarks", "two_stage_sizes_mb", "dag_benchmarks",
        "dcg_benchmarks", "streaming_benchmarks", "replay",
    },
    "demands": {f"{t.value}_{k}" for t in AppType for k in ("am", "task")},
    "durations": _DURATION_KEYS,
    "run": {"spc", "placement", "t_fail_s", "seed", "min_duration_s", "schedule_tick_s"},
}


def parse_config(text: str, base_dir: str | Path | None = None) -> RunConfig:
    """Parse and validate configuration text; errors name the offending key."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable configuration: {exc}") from exc

    for sec in cp.sections():
        if sec.startswith("queue:"):
            known = {"min", "max", "types", "parent"}
        elif sec in _KNOWN:
            known = _KNOWN[sec]
        else:
            raise ConfigError(f"[{sec}]: unknown section")
        for key in cp[sec]:
            if key not in known:
                raise ConfigError(f"[{sec}] {key}: unknown key")

    def get(sec, key, conv, default):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"[{sec}] {key}: cannot parse {raw!r} ({exc})") from exc

    d = ClusterConfig()
    cluster = ClusterConfig(
        nodes=get("cluster", "nodes", int, d.nodes),
        node_capacity=ResourceVector(
            get("cluster", "node_vcores", int, d.node_capacity.vcores),
            get("cluster", "node_memory_mb", int, d.node_capacity.memory_mb),
        ),
        min_allocation=ResourceVector(
            get("cluster", "min_allocation_vcores", int, d.min_allocation.vcores),
            get("cluster", "min_allocation_mb", int, d.min_allocation.memory_mb),
        ),
        max_allocation=ResourceVector(
            get("cluster", "max_allocation_vcores", int, d.max_allocation.vcores),
            get("cluster", "max_allocation_mb", int, d.max_allocation.memory_mb),
        ),
    )

    kind = get("queues", "scenario", ScenarioKind, ScenarioKind.ONE_QUEUE)
    queue_secs = [s for s in cp.sections() if s.startswith("queue:")]
    if kind is ScenarioKind.CUSTOM:
        defs = []
        for sec in queue_secs:
            types = get(sec, "types", lambda s: tuple(AppType(x.strip()) for x in s.split(",") if x.strip()), ())
            defs.append(QueueDef(
                sec.split(":", 1)[1],
                get(sec, "min", _fraction, None),
                get(sec, "max", _fraction, Fraction(1)),
                types,
                get(sec, "parent", str, None),
            ))
            if defs[-1].min_fraction is None:
                raise ConfigError(f"[{sec}] min: required")
        if not defs:
            raise ConfigError("[queues] scenario: custom scenario declares no [queue:NAME] sections")
        scenario = ScenarioConfig(kind, tuple(defs))
    else:
        if queue_secs:
            raise ConfigError(f"[{queue_secs[0]}]: queue sections are only allowed with scenario = custom")
        scenario = ScenarioConfig.named(kind)

    w = WorkloadSpec()
    demands = dict(w.demands)
    for t in AppType:
        am, task = demands[t]
        demands[t] = (
            get("demands", f"{t.value}_am", _vector, am),
            get("demands", f"{t.value}_task", _vector, task),
        )
    seed = get("run", "seed", int, 1)
    workload = WorkloadSpec(
        two_stage_benchmarks=get("workload", "two_stage_benchmarks", _counts, w.two_stage_benchmarks),
        two_stage_sizes=get("workload", "two_stage_sizes_mb", lambda s: _counts(s, int), w.two_stage_sizes),
        dag_benchmarks=get("workload", "dag_benchmarks", _counts, w.dag_benchmarks),
        dcg_benchmarks=get("workload", "dcg_benchmarks", _counts, w.dcg_benchmarks),
        streaming_benchmarks=get("workload", "streaming_benchmarks", _counts, w.streaming_benchmarks),
        mean_interval_s=get("workload", "mean_interval_s", float, w.mean_interval_s),
        seed=seed,
        demands=demands,
    )
    replay = get("workload", "replay", str, None)
    if replay and base_dir is not None and not Path(replay).is_absolute():
        replay = str(Path(base_dir) / replay)

    dd = DurationModel()
    durations = DurationModel(**{
        f.name: get("durations", f.name, float, getattr(dd, f.name)) for f in dataclasses.fields(DurationModel)
    })

    placement = get("run", "placement", str, "auto")
    cfg = RunConfig(
        cluster=cluster,
        spc=get("run", "spc", SpcKind, SpcKind.CAP_FIFO),
        scenario=scenario,
        workload=workload,
        replay=replay,
        durations=durations,
        t_fail_s=get("run", "t_fail_s", float, 300.0),
        seed=seed,
        placement=None if placement == "auto" else get("run", "placement", PlacementPolicy, None),
        underserved_metric=get("queues", "underserved_metric", str, "relative"),
        min_duration_s=get("run", "min_duration_s", float, 0.0),
        schedule_tick_s=get("run", "schedule_tick_s", float, 1.0),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


def emit_config(cfg: RunConfig) -> str:
    """Serialise a resolved configuration; ``parse_config`` reads it back unchanged."""
    c = cfg.cluster
    out = [
        "[cluster]",
        f"nodes = {c.nodes}",
        f"node_vcores = {c.node_capacity.vcores}",
        f"node_memory_mb = {c.node_capacity.memory_mb}",
        f"min_allocation_vcores = {c.min_allocation.vcores}",
        f"max_allocation_vcores = {c.max_allocation.vcores}",
        f"min_allocation_mb = {c.min_allocation.memory_mb}",
        f"max_allocation_mb = {c.max_allocation.memory_mb}",
        "",
        "[queues]",
        f"scenario = {cfg.scenario.kind.value}",
        f"underserved_metric = {cfg.underserved_metric}",
        "",
    ]
    if cfg.scenario.kind is ScenarioKind.CUSTOM:
        for q in cfg.scenario.queues:
            out.append(f"[queue:{q.name}]")
            out.append(f"min = {_fraction_str(q.min_fraction)}")
            out.append(f"max = {_fraction_str(q.max_fraction)}")
            if q.types:
                out.append(f"types = {', '.join(t.value for t in q.types)}")
            if q.parent:
                out.append(f"parent = {q.parent}")
            out.append("")
    w = cfg.workload
    out += [
        "[workload]",
        f"mean_interval_s = {w.mean_interval_s!r}",
        f"two_stage_benchmarks = {_counts_str(w.two_stage_benchmarks)}",
        f"two_stage_sizes_mb = {_counts_str(w.two_stage_sizes)}",
        f"dag_benchmarks = {_counts_str(w.dag_benchmarks)}",
        f"dcg_benchmarks = {_counts_str(w.dcg_benchmarks)}",
        f"streaming_benchmarks = {_counts_str(w.streaming_benchmarks)}",
    ]
    if cfg.replay:
        out.append(f"replay = {cfg.replay}")
    out += ["", "[demands]"]
    for t in AppType:
        am, task = w.demands[t]
        out.append(f"{t.value}_am = {_vector_str(am)}")
        out.append(f"{t.value}_task = {_vector_str(task)}")
    out += ["", "[durations]"]
    for f in dataclasses.fields(DurationModel):
        out.append(f"{f.name} = {float(getattr(cfg.durations, f.name))!r}")
    out += [
        "",
        "[run]",
        f"spc = {cfg.spc.value}",
        f"placement = {cfg.placement.value if cfg.placement else 'auto'}",
        f"t_fail_s = {float(cfg.t_fail_s)!r}",
        f"seed = {cfg.seed}",
        f"min_duration_s = {float(cfg.min_duration_s)!r}",
        f"schedule_tick_s = {float(cfg.schedule_tick_s)!r}",
    ]
    return "\n".join(out) + "\n"
