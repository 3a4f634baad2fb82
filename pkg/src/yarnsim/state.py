"""Mutable cluster state shared by the scheduler and the event engine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .queues import QueueNode
from .resources import ZERO, AccountingError, ResourceVector
from .workload import AppSpec


class RequestKind(enum.Enum):
    AM = "am"
    TASK = "task"


class AppPhase(enum.Enum):
    SUBMITTED = "submitted"
    AM_PENDING = "am_pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (AppPhase.COMPLETED, AppPhase.FAILED)


_NEXT_PHASE = {
    AppPhase.SUBMITTED: {AppPhase.AM_PENDING},
    AppPhase.AM_PENDING: {AppPhase.RUNNING, AppPhase.FAILED},
    AppPhase.RUNNING: {AppPhase.COMPLETED, AppPhase.FAILED},
    AppPhase.COMPLETED: set(),
    AppPhase.FAILED: set(),
}


@dataclass(frozen=True)
class ContainerRequest:
    request_id: int
    app_id: str
    kind: RequestKind
    demand: ResourceVector
    priority: int
    created_at: float
    task_index: int = -1


@dataclass
class Container:
    container_id: int
    app_id: str
    kind: RequestKind
    demand: ResourceVector
    node_id: int
    queue: str
    start_time: float
    task_index: int = -1


@dataclass
class NodeState:
    node_id: int
    capacity: ResourceVector
    allocated: ResourceVector = ZERO
    containers: dict[int, Container] = field(default_factory=dict)

    @property
    def free(self) -> ResourceVector:
        return self.capacity - self.allocated

    def add(self, c: Container) -> None:
        if not self.allocated + c.demand <= self.capacity:
            raise AccountingError(f"node {self.node_id} over capacity")
        self.allocated = self.allocated + c.demand
        self.containers[c.container_id] = c

    def remove(self, container_id: int) -> Container:
        c = self.containers.pop(container_id)
        self.allocated = self.allocated - c.demand
        return c


@dataclass
class AppRuntimeState:
    spec: AppSpec
    queue: str
    phase: AppPhase = AppPhase.SUBMITTED
    requests: list[ContainerRequest] = field(default_factory=list)
    containers: dict[int, Container] = field(default_factory=dict)
    allocated: ResourceVector = ZERO
    tasks_finished: int = 0
    finish_time: float | None = None

    @property
    def app_id(self) -> str:
        return self.spec.app_id

    def advance(self, phase: AppPhase) -> None:
        if phase not in _NEXT_PHASE[self.phase]:
            raise AccountingError(f"{self.app_id}: illegal transition {self.phase.value} -> {phase.value}")
        self.phase = phase

    def has_request(self) -> bool:
        return bool(self.requests)


@dataclass
class ClusterState:
    """Everything a scheduling pass reads and mutates."""

    nodes: list[NodeState]
    root: QueueNode
    apps: dict[str, AppRuntimeState]
    capacity: ResourceVector
    placement: str = "pack"
    underserved_metric: str = "relative"
    next_container_id: int = 0

    def leaf(self, name: str) -> QueueNode:
        return self.root.find(name)

    def new_container_id(self) -> int:
        self.next_container_id += 1
        return self.next_container_id
