"""Discrete-event simulation of a YARN-like cluster running a workload."""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field

from . import eventlog as ev
from .eventlog import EventLog, LogRecord
from .policies import DEFAULT_PLACEMENT, PlacementPolicy, SpcKind, schedule_pass
from .queues import QueueNode, ScenarioConfig, build_hierarchy, credit
from .resources import AccountingError, ConfigError, ResourceVector, sum_vectors
from .state import (
    AppPhase,
    AppRuntimeState,
    ClusterState,
    Container,
    ContainerRequest,
    NodeState,
    RequestKind,
)
from .workload import AppSpec, DurationModel, sample_task_duration

log = logging.getLogger(__name__)

AM_PRIORITY = 0
TASK_PRIORITY = 1


class EventKind(enum.IntEnum):
    # value doubles as the tie-break order for simultaneous events
    APP_ARRIVAL = 0
    CONTAINER_FINISHED = 1
    STREAM_BATCH_ARRIVAL = 2
    STREAM_BATCH_FINISHED = 3
    REQUEST_TIMEOUT_CHECK = 4
    SCHEDULE_TICK = 5


@dataclass(order=True)
class SimEvent:
    time: float
    kind: EventKind
    seq: int
    payload: tuple = field(compare=False, default=())


@dataclass
class StreamBatchRecord:
    batch_id: int
    arrival_time: float
    start_time: float | None = None
    finish_time: float | None = None


@dataclass
class ClusterConfig:
    """Slave nodes only; the RM host carries no containers."""

    nodes: int = 30
    node_capacity: ResourceVector = ResourceVector(2, 2048)
    min_allocation: ResourceVector = ResourceVector(1, 1024)
    max_allocation: ResourceVector = ResourceVector(2, 2048)

    @property
    def total(self) -> ResourceVector:
        return self.node_capacity.scale(self.nodes)

    def validate(self) -> None:
        if self.nodes < 1:
            raise ConfigError("cluster.nodes must be at least 1")
        if not self.min_allocation <= self.max_allocation:
            raise ConfigError("cluster: minimum allocation exceeds maximum allocation")
        if not self.max_allocation <= self.node_capacity:
            raise ConfigError("cluster: node capacity is smaller than the maximum allocation")
        if self.min_allocation.vcores < 1 or self.min_allocation.memory_mb < 1:
            raise ConfigError("cluster: minimum allocation must be positive")

    def check_demand(self, what: str, demand: ResourceVector) -> None:
        if not (self.min_allocation <= demand <= self.max_allocation):
            raise ConfigError(
                f"{what}: demand {demand} outside allocation bounds "
                f"[{self.min_allocation}, {self.max_allocation}]"
            )


@dataclass
class _Stream:
    pending: deque = field(default_factory=deque)
    busy: bool = False
    batches: dict[int, StreamBatchRecord] = field(default_factory=dict)


def check_invariants(state: ClusterState) -> None:
    """Assert node, queue and application accounting agree with each other."""
    for n in state.nodes:
        if sum_vectors(c.demand for c in n.containers.values()) != n.allocated:
            raise AccountingError(f"node {n.node_id}: allocated differs from its containers")
        if not n.allocated <= n.capacity:
            raise AccountingError(f"node {n.node_id} over capacity")
    on_nodes = sum_vectors(n.allocated for n in state.nodes)
    by_apps = sum_vectors(a.allocated for a in state.apps.values())
    in_leaves = sum_vectors(q.used for q in state.root.leaves())
    if not on_nodes == by_apps == in_leaves:
        raise AccountingError(f"conservation broken: nodes {on_nodes}, apps {by_apps}, leaves {in_leaves}")
    for q in state.root.walk():
        if not q.used <= q.cap(state.capacity):
            raise AccountingError(f"queue {q.name!r} above its max capacity")
        if q.children and sum_vectors(c.used for c in q.children) != q.used:
            raise AccountingError(f"queue {q.name!r} usage differs from its children")


class Simulator:
    def __init__(
        self,
        cluster: ClusterConfig,
        apps: list[AppSpec],
        spc: SpcKind,
        scenario: ScenarioConfig,
        durations: DurationModel | None = None,
        seed: int = 1,
        *,
        placement: PlacementPolicy | str | None = None,
        t_fail_s: float = 300.0,
        underserved_metric: str = "relative",
        min_duration_s: float = 0.0,
        schedule_tick_s: float = 1.0,
        check: bool = False,
    ):
        cluster.validate()
        self.spc = SpcKind(spc)
        self.scenario = scenario
        self.routing = scenario.routing()
        self.durations = durations or DurationModel()
        self.durations.validate()
        if t_fail_s <= 0 or schedule_tick_s <= 0:
            raise ConfigError("t_fail_s and schedule_tick_s must be positive")
        if underserved_metric not in ("relative", "absolute"):
            raise ConfigError(f"unknown underserved_metric {underserved_metric!r}")
        ids = [a.app_id for a in apps]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate application ids in workload")
        for a in apps:
            cluster.check_demand(f"{a.app_id} AM", a.am_demand)
            cluster.check_demand(f"{a.app_id} task", a.task_demand)
        placement = PlacementPolicy(placement) if placement else DEFAULT_PLACEMENT[self.spc]
        root = build_hierarchy(scenario, cluster.total)
        self.state = ClusterState(
            nodes=[NodeState(i, cluster.node_capacity) for i in range(cluster.nodes)],
            root=root,
            apps={},
            capacity=cluster.total,
            placement=placement.value,
            underserved_metric=underserved_metric,
        )
        self.specs = {a.app_id: a for a in apps}
        self.t_fail = t_fail_s
        self.min_duration = min_duration_s
        self.tick = schedule_tick_s
        self.check = check
        self.rng = random.Random(f"durations:{seed}")
        self.log = EventLog()
        self.now = 0.0
        self._heap: list[SimEvent] = []
        self._seq = itertools.count()
        self._req_ids = itertools.count(1)
        self._running: dict[int, Container] = {}
        self._streams: dict[str, _Stream] = {}
        self._tick_pending = False
        self._open = sum(1 for a in apps if not a.is_streaming)
        self._arrivals_left = len(apps)
        self.done_time: float | None = None
        self.end_time: float | None = None
        self.events_processed = 0

    # -- plumbing -------------------------------------------------------

    def _push(self, time: float, kind: EventKind, *payload) -> None:
        heapq.heappush(self._heap, SimEvent(time, kind, next(self._seq), payload))

    def _record(self, kind: str, app: str = "", **kw) -> None:
        self.log.append(LogRecord(self.now, kind, app, **kw))

    def _leaf(self, app: AppRuntimeState) -> QueueNode:
        return self.state.leaf(app.queue)

    def _done(self) -> bool:
        return self._arrivals_left == 0 and self._open == 0

    # -- main loop ------------------------------------------------------

    def run(self) -> EventLog:
        for a in sorted(self.specs.values(), key=lambda a: (a.submission_time, a.app_id)):
            self._push(a.submission_time, EventKind.APP_ARRIVAL, a.app_id)
        if self._done():
            self.done_time = 0.0
        handlers = {
            EventKind.APP_ARRIVAL: self.on_app_arrival,
            EventKind.CONTAINER_FINISHED: self.on_container_finished,
            EventKind.STREAM_BATCH_ARRIVAL: self.on_stream_batch,
            EventKind.STREAM_BATCH_FINISHED: self.on_stream_batch_finished,
            EventKind.REQUEST_TIMEOUT_CHECK: self.on_request_timeout_check,
            EventKind.SCHEDULE_TICK: self.on_schedule_tick,
        }
        while self._heap:
            if self.done_time is not None and self._heap[0].time > max(self.done_time, self.min_duration):
                break
            event = heapq.heappop(self._heap)
            if event.time < self.now:
                raise AccountingError("event queue went backwards in time")
            self.now = event.time
            handlers[event.kind](*event.payload)
            self.events_processed += 1
            if self.check:
                check_invariants(self.state)
            if self.done_time is None and self._done():
                self.done_time = self.now
        self._finalize()
        return self.log

    def _finalize(self) -> None:
        end = self.now
        if self.done_time is not None:
            end = max(self.done_time, self.min_duration)
        self.now = end
        self.end_time = end
        for app in self.state.apps.values():
            if app.phase.terminal:
                continue
            if app.spec.is_streaming and app.phase is AppPhase.RUNNING and not app.requests:
                # its containers stay up: the stream outlives the measured run
                self._terminate(app, AppPhase.COMPLETED)
            else:
                self._fail(app, "run_end")
        self._record(ev.RUN_END)
        if self.check:
            check_invariants(self.state)

    def _schedule(self) -> None:
        while True:
            grants = schedule_pass(self.state, self.spc, self.now)
            if not grants:
                break
            for g in grants:
                c = g.container
                self._running[c.container_id] = c
                self._record(
                    ev.CONTAINER_START, c.app_id, container=c.container_id, node=c.node_id,
                    queue=c.queue, sign=1, delta=c.demand, detail=c.kind.value,
                )
            for g in grants:
                app = self.state.apps[g.container.app_id]
                if g.request.kind is RequestKind.AM:
                    self.on_am_granted(app)
                else:
                    self._start_task(app, g.container)
            for app_id in {g.container.app_id for g in grants}:
                if app_id in self._streams:
                    self._try_start_batch(self.state.apps[app_id])
        waiting = any(a.requests for a in self.state.apps.values())
        if waiting and not self._tick_pending:
            self._tick_pending = True
            self._push(self.now + self.tick, EventKind.SCHEDULE_TICK)

    def _start_task(self, app: AppRuntimeState, c: Container) -> None:
        d = sample_task_duration(app.spec, c.task_index, self.durations, self.rng)
        if math.isfinite(d):
            self._push(self.now + d, EventKind.CONTAINER_FINISHED, c.container_id)

    # -- handlers -------------------------------------------------------

    def on_app_arrival(self, app_id: str) -> None:
        spec = self.specs[app_id]
        self._arrivals_left -= 1
        leaf = self.state.leaf(self.routing[spec.app_type])
        app = AppRuntimeState(spec, leaf.name)
        self.state.apps[app_id] = app
        leaf.pending_apps.append(app_id)
        app.advance(AppPhase.AM_PENDING)
        self._record(ev.SUBMIT, app_id, queue=leaf.name, detail=spec.app_type.value)
        app.requests.append(
            ContainerRequest(next(self._req_ids), app_id, RequestKind.AM, spec.am_demand, AM_PRIORITY, self.now)
        )
        self._push(self.now + self.t_fail, EventKind.REQUEST_TIMEOUT_CHECK, app_id)
        self._schedule()

    def on_am_granted(self, app: AppRuntimeState) -> None:
        spec = app.spec
        for i in range(spec.task_count):
            app.requests.append(
                ContainerRequest(
                    next(self._req_ids), app.app_id, RequestKind.TASK, spec.task_demand,
                    TASK_PRIORITY, self.now, task_index=i,
                )
            )
        app.advance(AppPhase.RUNNING)
        self._record(ev.APP_RUNNING, app.app_id, queue=app.queue)
        self._push(self.now + self.t_fail, EventKind.REQUEST_TIMEOUT_CHECK, app.app_id)
        if spec.is_streaming:
            self._streams[app.app_id] = _Stream()
            self._push(self.now, EventKind.STREAM_BATCH_ARRIVAL, app.app_id)

    def _release(self, app: AppRuntimeState, container_id: int, detail: str) -> Container:
        c = self._running.pop(container_id)
        self.state.nodes[c.node_id].remove(container_id)
        del app.containers[container_id]
        app.allocated = app.allocated - c.demand
        credit(self._leaf(app), c.demand)
        self._record(
            ev.CONTAINER_END, app.app_id, container=c.container_id, node=c.node_id,
            queue=c.queue, sign=-1, delta=c.demand, detail=detail,
        )
        return c

    def _release_all(self, app: AppRuntimeState, detail: str) -> None:
        for cid in sorted(app.containers):
            self._release(app, cid, detail)

    def _terminate(self, app: AppRuntimeState, phase: AppPhase, detail: str = "") -> None:
        leaf = self._leaf(app)
        app.advance(phase)
        app.finish_time = self.now
        app.requests.clear()
        if app.app_id in leaf.pending_apps:
            leaf.pending_apps.remove(app.app_id)
        leaf.running_apps.discard(app.app_id)
        if not app.spec.is_streaming:
            self._open -= 1
        kind = ev.APP_COMPLETE if phase is AppPhase.COMPLETED else ev.APP_FAIL
        self._record(kind, app.app_id, queue=app.queue, detail=detail)

    def _fail(self, app: AppRuntimeState, reason: str) -> None:
        self._release_all(app, "killed")
        self._streams.pop(app.app_id, None)
        self._terminate(app, AppPhase.FAILED, reason)

    def on_container_finished(self, container_id: int) -> None:
        c = self._running.get(container_id)
        if c is None:
            return  # killed earlier
        app = self.state.apps[c.app_id]
        self._release(app, container_id, "finished")
        app.tasks_finished += 1
        if app.tasks_finished == app.spec.task_count:
            self._release_all(app, "finished")
            self._terminate(app, AppPhase.COMPLETED)
        self._schedule()

    def on_request_timeout_check(self, app_id: str) -> None:
        app = self.state.apps[app_id]
        if app.phase.terminal:
            return
        if any(r.created_at + self.t_fail <= self.now for r in app.requests):
            log.debug("%s failed after waiting %.0f s for a container", app_id, self.t_fail)
            self._fail(app, "timeout")
            self._schedule()

    def on_schedule_tick(self) -> None:
        self._tick_pending = False
        self._schedule()

    def on_stream_batch(self, app_id: str) -> None:
        stream = self._streams.get(app_id)
        if stream is None:
            return
        batch = StreamBatchRecord(len(stream.batches) + 1, self.now)
        stream.batches[batch.batch_id] = batch
        stream.pending.append(batch)
        self._record(ev.BATCH_ARRIVE, app_id, detail=str(batch.batch_id))
        self._push(self.now + self.durations.stream_interval_s, EventKind.STREAM_BATCH_ARRIVAL, app_id)
        self._try_start_batch(self.state.apps[app_id])

    def _try_start_batch(self, app: AppRuntimeState) -> None:
        stream = self._streams.get(app.app_id)
        if stream is None or stream.busy or not stream.pending:
            return
        # both task containers must be up before any batch is served
        if app.phase is not AppPhase.RUNNING or app.requests:
            return
        batch = stream.pending.popleft()
        batch.start_time = self.now
        stream.busy = True
        self._record(ev.BATCH_START, app.app_id, detail=str(batch.batch_id))
        self._push(
            self.now + self.durations.stream_service_s, EventKind.STREAM_BATCH_FINISHED,
            app.app_id, batch.batch_id,
        )

    def on_stream_batch_finished(self, app_id: str, batch_id: int) -> None:
        stream = self._streams.get(app_id)
        if stream is None:
            return
        stream.batches[batch_id].finish_time = self.now
        stream.busy = False
        self._record(ev.BATCH_FINISH, app_id, detail=str(batch_id))
        self._try_start_batch(self.state.apps[app_id])


def run(
    cluster: ClusterConfig,
    workload: list[AppSpec],
    spc: SpcKind,
    scenario: ScenarioConfig,
    durations: DurationModel | None = None,
    seed: int = 1,
    **options,
):
    """Simulate one workload and return ``(MetricsReport, EventLog)``."""
    from .metrics import compute_report

    sim = Simulator(cluster, workload, spc, scenario, durations, seed, **options)
    log_ = sim.run()
    return compute_report(log_), log_
