"""Hierarchical capacity queues: structure, routing and usage accounting."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .resources import ZERO, AccountingError, ConfigError, ResourceVector
from .workload import AppType


class QueueKind(enum.Enum):
    ROOT = "root"
    PARENT = "parent"
    LEAF = "leaf"


class ScenarioKind(enum.Enum):
    ONE_QUEUE = "one_queue"
    SEPARATE_QUEUE = "separate_queue"
    MERGED_QUEUE = "merged_queue"
    CUSTOM = "custom"


@dataclass(eq=False)
class QueueNode:
    name: str
    kind: QueueKind
    min_fraction: Fraction
    max_fraction: Fraction
    children: list[QueueNode] = field(default_factory=list)
    parent: QueueNode | None = field(default=None, repr=False)
    pending_apps: list[str] = field(default_factory=list)
    running_apps: set[str] = field(default_factory=set)
    used: ResourceVector = ZERO

    @property
    def is_leaf(self) -> bool:
        return self.kind is QueueKind.LEAF

    def ancestry(self):
        """This queue followed by each ancestor up to the root."""
        q = self
        while q is not None:
            yield q
            q = q.parent

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def leaves(self) -> list[QueueNode]:
        return [q for q in self.walk() if q.is_leaf]

    def find(self, name: str) -> QueueNode:
        for q in self.walk():
            if q.name == name:
                return q
        raise KeyError(name)

    def apps(self) -> list[str]:
        """All application ids held by leaves in this subtree."""
        out = []
        for leaf in self.leaves():
            out.extend(leaf.pending_apps)
            out.extend(sorted(leaf.running_apps))
        return out

    def cap(self, cluster: ResourceVector) -> ResourceVector:
        return ResourceVector(
            math.floor(self.max_fraction * cluster.vcores),
            math.floor(self.max_fraction * cluster.memory_mb),
        )


@dataclass(frozen=True)
class QueueDef:
    """One queue declaration; ``types`` is empty for parent queues."""

    name: str
    min_fraction: Fraction
    max_fraction: Fraction
    types: tuple[AppType, ...] = ()
    parent: str | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind
    queues: tuple[QueueDef, ...]

    @classmethod
    def named(cls, kind: ScenarioKind | str) -> ScenarioConfig:
        kind = ScenarioKind(kind)
        F = Fraction
        if kind is ScenarioKind.ONE_QUEUE:
            qs = (QueueDef("default", F(1), F(1), tuple(AppType)),)
        elif kind is ScenarioKind.SEPARATE_QUEUE:
            qs = tuple(QueueDef(t.value, F(1, 4), F(3, 10), (t,)) for t in AppType)
        elif kind is ScenarioKind.MERGED_QUEUE:
            qs = (
                QueueDef("streaming", F(1, 5), F(3, 10), (AppType.STREAMING,)),
                QueueDef("others", F(4, 5), F(9, 10), (AppType.TWO_STAGE, AppType.DAG, AppType.DCG)),
            )
        else:
            raise ConfigError("custom scenarios must list their queues explicitly")
        return cls(kind, qs)

    def routing(self) -> dict[AppType, str]:
        table: dict[AppType, str] = {}
        for q in self.queues:
            for t in q.types:
                if t in table:
                    raise ConfigError(f"{t.value} is routed to both {table[t]!r} and {q.name!r}")
                table[t] = q.name
        missing = [t.value for t in AppType if t not in table]
        if missing:
            raise ConfigError(f"no queue accepts application types: {', '.join(missing)}")
        return table

    def validate(self) -> None:
        names = set()
        parents = {q.parent for q in self.queues if q.parent is not None}
        for q in self.queues:
            if q.name in names or q.name == "root":
                raise ConfigError(f"duplicate queue name {q.name!r}")
            if q.parent is not None and q.parent not in names:
                raise ConfigError(f"queue {q.name!r}: parent {q.parent!r} must be declared before it")
            names.add(q.name)
            if not (0 <= q.min_fraction <= 1 and 0 <= q.max_fraction <= 1):
                raise ConfigError(f"queue {q.name!r}: fractions must lie in [0, 1]")
            if q.min_fraction > q.max_fraction:
                raise ConfigError(f"queue {q.name!r}: min capacity exceeds max capacity")
            is_parent = q.name in parents
            if is_parent and q.types:
                raise ConfigError(f"queue {q.name!r} has children and cannot accept applications")
            if not is_parent and q.min_fraction == 0:
                raise ConfigError(f"leaf queue {q.name!r} needs a positive min capacity")
        by_parent: dict[str | None, Fraction] = {}
        for q in self.queues:
            by_parent[q.parent] = by_parent.get(q.parent, Fraction(0)) + q.min_fraction
        for p, total in by_parent.items():
            if total > 1:
                raise ConfigError(f"min capacities under {p or 'root'!r} sum to {total} > 1")
        self.routing()


def build_hierarchy(config: ScenarioConfig, cluster_capacity: ResourceVector) -> QueueNode:
    config.validate()
    if cluster_capacity.vcores <= 0 or cluster_capacity.memory_mb <= 0:
        raise ConfigError("cluster capacity must be positive")
    root = QueueNode("root", QueueKind.ROOT, Fraction(1), Fraction(1))
    parents = {q.parent for q in config.queues if q.parent is not None}
    nodes = {"root": root}
    for q in config.queues:
        kind = QueueKind.PARENT if q.name in parents else QueueKind.LEAF
        up = nodes[q.parent or "root"]
        node = QueueNode(q.name, kind, Fraction(q.min_fraction), Fraction(q.max_fraction), parent=up)
        up.children.append(node)
        nodes[q.name] = node
    return root


def route(app_type: AppType, config: ScenarioConfig) -> str:
    return config.routing()[app_type]


def used_ratio(queue: QueueNode, cluster_capacity: ResourceVector, metric: str = "relative") -> Fraction:
    """Memory use of a leaf as a fraction of the cluster, divided by its guarantee.

    With ``metric="absolute"`` the guarantee is ignored.
    """
    absolute = Fraction(queue.used.memory_mb, cluster_capacity.memory_mb)
    if metric == "absolute":
        return absolute
    if queue.min_fraction == 0:
        raise ConfigError(f"queue {queue.name!r} has no guaranteed capacity")
    return absolute / queue.min_fraction


def can_grow(queue: QueueNode, demand: ResourceVector, cluster_capacity: ResourceVector) -> bool:
    # the leaf's cap and every ancestor's cap must hold
    return all(q.used + demand <= q.cap(cluster_capacity) for q in queue.ancestry())


def charge(queue: QueueNode, demand: ResourceVector) -> None:
    for q in queue.ancestry():
        q.used = q.used + demand


def credit(queue: QueueNode, demand: ResourceVector) -> None:
    if not demand <= queue.used:
        raise AccountingError(f"credit {demand} exceeds usage {queue.used} of queue {queue.name!r}")
    for q in queue.ancestry():
        q.used = q.used - demand
