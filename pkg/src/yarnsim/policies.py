"""Scheduling-policy combinations: queue choice, app choice, request order, placement."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterable

from .queues import QueueNode, can_grow, charge, used_ratio
from .resources import ResourceVector, dominant_share, fits
from .state import (
    AppRuntimeState,
    ClusterState,
    Container,
    ContainerRequest,
    NodeState,
    RequestKind,
)


class SpcKind(enum.Enum):
    CAP_FIFO = "cap_fifo"
    FAIR_FIFO = "fair_fifo"
    FAIR_FAIR = "fair_fair"
    FAIR_DRF = "fair_drf"


class IntraPolicy(enum.Enum):
    FIFO = "fifo"
    FAIR = "fair"
    DRF = "drf"


class PlacementPolicy(enum.Enum):
    PACK = "pack"
    SPREAD = "spread"


INTRA_POLICY = {
    SpcKind.CAP_FIFO: IntraPolicy.FIFO,
    SpcKind.FAIR_FIFO: IntraPolicy.FIFO,
    SpcKind.FAIR_FAIR: IntraPolicy.FAIR,
    SpcKind.FAIR_DRF: IntraPolicy.DRF,
}

DEFAULT_PLACEMENT = {
    SpcKind.CAP_FIFO: PlacementPolicy.PACK,
    SpcKind.FAIR_FIFO: PlacementPolicy.SPREAD,
    SpcKind.FAIR_FAIR: PlacementPolicy.SPREAD,
    SpcKind.FAIR_DRF: PlacementPolicy.SPREAD,
}


@dataclass(frozen=True)
class Grant:
    request: ContainerRequest
    node_id: int
    queue: str
    container: Container


def _arrival_key(app: AppRuntimeState):
    return (app.spec.submission_time, app.app_id)


def next_request(app: AppRuntimeState) -> ContainerRequest | None:
    if not app.requests:
        return None
    return min(app.requests, key=lambda r: (r.priority, r.created_at, r.request_id))


def place(request: ContainerRequest, nodes: Iterable[NodeState], policy: PlacementPolicy) -> int | None:
    """Pick a node able to host ``request``; None means fragmentation or a full cluster.

    PACK prefers nodes already running containers, then the least free memory.
    SPREAD prefers the most free memory.
    """
    feasible = [n for n in nodes if fits(request.demand, n.free)]
    if not feasible:
        return None
    if PlacementPolicy(policy) is PlacementPolicy.PACK:
        best = min(feasible, key=lambda n: (n.allocated.is_zero(), n.free.memory_mb, n.node_id))
    else:
        best = min(feasible, key=lambda n: (-n.free.memory_mb, n.node_id))
    return best.node_id


def _app_key(app: AppRuntimeState, policy: IntraPolicy, cluster: ResourceVector):
    if policy is IntraPolicy.FAIR:
        return (app.allocated.memory_mb, *_arrival_key(app))
    if policy is IntraPolicy.DRF:
        return (dominant_share(app.allocated, cluster).share, *_arrival_key(app))
    return _arrival_key(app)


def pick_app(
    queue: QueueNode,
    policy: IntraPolicy,
    cluster_capacity: ResourceVector,
    apps: dict[str, AppRuntimeState],
    candidates: Iterable[str] | None = None,
) -> str | None:
    """Choose which application of a leaf is served next.

    Only apps with an ungranted request are eligible; ``candidates`` narrows
    the pool further.
    """
    pool = queue.apps() if candidates is None else candidates
    eligible = [apps[a] for a in pool if apps[a].has_request()]
    if not eligible:
        return None
    return min(eligible, key=lambda a: _app_key(a, IntraPolicy(policy), cluster_capacity)).app_id


def select_leaf_capacity(
    leaves: list[QueueNode],
    cluster_capacity: ResourceVector,
    schedulable: Callable[[QueueNode], bool] = lambda q: True,
    metric: str = "relative",
) -> QueueNode | None:
    ready = [(used_ratio(q, cluster_capacity, metric), i, q) for i, q in enumerate(leaves) if schedulable(q)]
    if not ready:
        return None
    return min(ready, key=lambda t: t[:2])[2]


def _earliest_unfinished(queue: QueueNode, apps: dict[str, AppRuntimeState]):
    keys = [_arrival_key(apps[a]) for a in queue.apps() if not apps[a].phase.terminal]
    return min(keys) if keys else (float("inf"), "")


def select_leaf_fair(
    root: QueueNode,
    policy: IntraPolicy,
    cluster_capacity: ResourceVector,
    apps: dict[str, AppRuntimeState],
    schedulable: Callable[[QueueNode], bool] = lambda q: True,
) -> QueueNode | None:
    """Walk down from the root, choosing one child per level by ``policy``."""
    policy = IntraPolicy(policy)

    def subtree_ready(q: QueueNode) -> bool:
        return any(schedulable(leaf) for leaf in q.leaves())

    def key(q: QueueNode):
        if policy is IntraPolicy.FAIR:
            return q.used.memory_mb
        if policy is IntraPolicy.DRF:
            return dominant_share(q.used, cluster_capacity).share
        return _earliest_unfinished(q, apps)

    node = root
    while not node.is_leaf:
        ready = [(key(c), i, c) for i, c in enumerate(node.children) if subtree_ready(c)]
        if not ready:
            return None
        node = min(ready, key=lambda t: t[:2])[2]
    return node if schedulable(node) else None


def grant(state: ClusterState, app: AppRuntimeState, request: ContainerRequest, node_id: int, now: float) -> Grant:
    """Allocate ``request`` on a node and charge the app's queue."""
    leaf = state.leaf(app.queue)
    node = state.nodes[node_id]
    container = Container(
        container_id=state.new_container_id(),
        app_id=app.app_id,
        kind=request.kind,
        demand=request.demand,
        node_id=node_id,
        queue=leaf.name,
        start_time=now,
        task_index=request.task_index,
    )
    app.requests.remove(request)
    node.add(container)
    app.containers[container.container_id] = container
    app.allocated = app.allocated + request.demand
    charge(leaf, request.demand)
    if request.kind is RequestKind.AM and app.app_id in leaf.pending_apps:
        leaf.pending_apps.remove(app.app_id)
        leaf.running_apps.add(app.app_id)
    return Grant(request, node_id, leaf.name, container)


def schedule_pass(state: ClusterState, spc: SpcKind, now: float = 0.0) -> list[Grant]:
    """Grant containers one at a time until nothing more can be placed.

    Each iteration selects a leaf, then an app, then that app's most urgent
    request, and finally a node. An app whose request cannot be placed is
    skipped for the rest of the pass: grants only shrink free space, so it
    cannot become placeable later in the same pass.
    """
    spc = SpcKind(spc)
    intra = INTRA_POLICY[spc]
    placement = PlacementPolicy(state.placement)
    cap = state.capacity
    leaves = state.root.leaves()
    blocked: set[str] = set()
    grants: list[Grant] = []

    while True:
        ready: dict[str, list[str]] = {}
        for leaf in leaves:
            ids = []
            for a in leaf.apps():
                if a in blocked:
                    continue
                req = next_request(state.apps[a])
                if req is not None and can_grow(leaf, req.demand, cap):
                    ids.append(a)
            if ids:
                ready[leaf.name] = ids
        if not ready:
            return grants

        def schedulable(q: QueueNode) -> bool:
            return q.name in ready

        if spc is SpcKind.CAP_FIFO:
            leaf = select_leaf_capacity(leaves, cap, schedulable, state.underserved_metric)
        else:
            leaf = select_leaf_fair(state.root, intra, cap, state.apps, schedulable)
        app_id = pick_app(leaf, intra, cap, state.apps, ready[leaf.name])
        app = state.apps[app_id]
        req = next_request(app)
        node_id = place(req, state.nodes, placement)
        if node_id is None:
            blocked.add(app_id)
            continue
        grants.append(grant(state, app, req, node_id, now))

