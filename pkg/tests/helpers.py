"""Random small cluster states and a naive reference scheduler used as an oracle."""

from __future__ import annotations

import math
import random
from fractions import Fraction

from yarnsim.policies import PlacementPolicy, SpcKind
from yarnsim.queues import QueueDef, ScenarioConfig, ScenarioKind, build_hierarchy, charge
from yarnsim.resources import ResourceVector as RV
from yarnsim.state import (
    AppPhase,
    AppRuntimeState,
    ClusterState,
    Container,
    ContainerRequest,
    NodeState,
    RequestKind,
)
from yarnsim.workload import AppSpec, AppType

NODE_SHAPES = [RV(2, 2048), RV(4, 4096), RV(2, 4096), RV(4, 2048)]
DEMANDS = [RV(1, 1024), RV(1, 2048), RV(2, 1024), RV(2, 2048)]


def random_scenario(rng: random.Random) -> ScenarioConfig:
    n = rng.randint(1, 3)
    names = [f"q{i}" for i in range(n)]
    types = list(AppType)
    routing = {t: names[rng.randrange(n)] for t in types}
    defs = []
    use_parent = n >= 2 and rng.random() < 0.4
    parent_of = {name: ("p" if use_parent and i < 2 else None) for i, name in enumerate(names)}
    budget = {None: Fraction(1), "p": Fraction(1)}
    if use_parent:
        pmin = Fraction(rng.randint(4, 8), 10)
        budget[None] -= pmin
        defs.append(QueueDef("p", pmin, Fraction(rng.randint(int(pmin * 10), 10), 10)))
    for name in names:
        parent = parent_of[name]
        siblings_left = sum(1 for m in names if parent_of[m] == parent and m >= name)
        lo = min(Fraction(rng.randint(1, 4), 10), budget[parent] / siblings_left)
        budget[parent] -= lo
        hi = Fraction(rng.randint(math.ceil(lo * 10), 10), 10)
        defs.append(QueueDef(name, lo, max(hi, lo), tuple(t for t in types if routing[t] == name), parent))
    return ScenarioConfig(ScenarioKind.CUSTOM, tuple(defs))


def random_state(rng: random.Random, max_nodes=4, max_apps=6) -> ClusterState:
    shape = rng.choice(NODE_SHAPES)
    nodes = [NodeState(i, shape if rng.random() < 0.7 else rng.choice(NODE_SHAPES))
             for i in range(rng.randint(1, max_nodes))]
    capacity = RV(sum(n.capacity.vcores for n in nodes), sum(n.capacity.memory_mb for n in nodes))
    root = build_hierarchy(random_scenario(rng), capacity)
    leaves = root.leaves()
    state = ClusterState(
        nodes=nodes, root=root, apps={}, capacity=capacity,
        placement=rng.choice(list(PlacementPolicy)).value,
        underserved_metric=rng.choice(["relative", "relative", "absolute"]),
    )
    req_id = 0
    for i in range(rng.randint(0, max_apps)):
        leaf = rng.choice(leaves)
        spec = AppSpec(
            app_id=f"a{rng.randint(0, 99):02d}_{i}", app_type=AppType.DAG, benchmark_name="x",
            submission_time=float(rng.randint(0, 5)), am_demand=rng.choice(DEMANDS),
            task_demand=rng.choice(DEMANDS), task_count=rng.randint(1, 4),
        )
        app = AppRuntimeState(spec, leaf.name, AppPhase.AM_PENDING)
        state.apps[spec.app_id] = app
        running = rng.random() < 0.5
        if running:
            # pre-existing AM and some tasks, placed wherever they happen to fit
            app.phase = AppPhase.RUNNING
            leaf.running_apps.add(spec.app_id)
            held = [(RequestKind.AM, spec.am_demand)] + [
                (RequestKind.TASK, spec.task_demand) for _ in range(rng.randint(0, spec.task_count))
            ]
            for kind, d in held:
                spots = [n for n in nodes if d <= n.free]
                if not spots or not all(q.used + d <= q.cap(capacity) for q in leaf.ancestry()):
                    continue
                node = rng.choice(spots)
                c = Container(state.new_container_id(), spec.app_id, kind, d, node.node_id, leaf.name, 0.0)
                node.add(c)
                app.containers[c.container_id] = c
                app.allocated = app.allocated + d
                charge(leaf, d)
            for _ in range(rng.randint(0, 3)):
                req_id += 1
                app.requests.append(ContainerRequest(
                    req_id, spec.app_id, RequestKind.TASK, spec.task_demand,
                    rng.randint(1, 2), float(rng.randint(0, 3)),
                ))
        else:
            leaf.pending_apps.append(spec.app_id)
            req_id += 1
            app.requests.append(ContainerRequest(req_id, spec.app_id, RequestKind.AM, spec.am_demand, 0, 0.0))
        if rng.random() < 0.1:
            app.phase = AppPhase.FAILED
            app.requests.clear()
    return state


# -- oracle ---------------------------------------------------------------------

def oracle_pass(state: ClusterState, spc: SpcKind) -> list[tuple[int, int, str]]:
    """Naive restatement of the three scheduling steps.

    Recomputes every quantity from raw containers each step and tries every
    (leaf, app) pair in preference order until one request lands on a node.
    """
    spc = SpcKind(spc)
    cap_v, cap_m = state.capacity.vcores, state.capacity.memory_mb
    node_cap = {n.node_id: (n.capacity.vcores, n.capacity.memory_mb) for n in state.nodes}
    node_load = {n.node_id: [0, 0] for n in state.nodes}
    for n in state.nodes:
        for c in n.containers.values():
            node_load[n.node_id][0] += c.demand.vcores
            node_load[n.node_id][1] += c.demand.memory_mb
    alloc = {}
    for a in state.apps.values():
        alloc[a.app_id] = [sum(c.demand.vcores for c in a.containers.values()),
                           sum(c.demand.memory_mb for c in a.containers.values())]
    reqs = {a.app_id: [(r.priority, r.created_at, r.request_id, r.demand.vcores, r.demand.memory_mb)
                       for r in a.requests] for a in state.apps.values()}
    sub = {a.app_id: (a.spec.submission_time, a.app_id) for a in state.apps.values()}
    alive = {a.app_id for a in state.apps.values() if a.phase not in (AppPhase.COMPLETED, AppPhase.FAILED)}

    # flatten the tree
    children, fracs, order, leaf_apps = {}, {}, [], {}

    def visit(q, parent):
        children[q.name] = [c.name for c in q.children]
        fracs[q.name] = (q.min_fraction, q.max_fraction, parent)
        order.append(q.name)
        if not q.children:
            leaf_apps[q.name] = list(q.pending_apps) + list(q.running_apps)
        for c in q.children:
            visit(c, q.name)

    visit(state.root, None)
    leaves = [n for n in order if not children[n]]

    def subtree_leaves(name):
        if not children[name]:
            return [name]
        return [l for c in children[name] for l in subtree_leaves(c)]

    def usage(name):
        v = m = 0
        for l in subtree_leaves(name):
            for a in leaf_apps[l]:
                v += alloc[a][0]
                m += alloc[a][1]
        return v, m

    def cap_ok(leaf, dv, dm):
        q = leaf
        while q is not None:
            mn, mx, parent = fracs[q]
            v, m = usage(q)
            if v + dv > math.floor(mx * cap_v) or m + dm > math.floor(mx * cap_m):
                return False
            q = parent
        return True

    def dshare(v, m):
        return max(Fraction(v, cap_v), Fraction(m, cap_m))

    intra = {SpcKind.CAP_FIFO: "fifo", SpcKind.FAIR_FIFO: "fifo",
             SpcKind.FAIR_FAIR: "fair", SpcKind.FAIR_DRF: "drf"}[spc]

    def queue_key(name):
        v, m = usage(name)
        if intra == "fair":
            return m
        if intra == "drf":
            return dshare(v, m)
        keys = [sub[a] for l in subtree_leaves(name) for a in leaf_apps[l] if a in alive]
        return min(keys) if keys else (float("inf"), "")

    def fair_order(name):
        kids = sorted(range(len(children[name])), key=lambda i: (queue_key(children[name][i]), i))
        out = []
        for i in kids:
            c = children[name][i]
            out += [c] if not children[c] else fair_order(c)
        return out

    def leaf_order():
        if spc is SpcKind.CAP_FIFO:
            def ratio(l):
                r = Fraction(usage(l)[1], cap_m)
                return r if state.underserved_metric == "absolute" else r / fracs[l][0]
            return [leaves[i] for i in sorted(range(len(leaves)), key=lambda i: (ratio(leaves[i]), i))]
        return fair_order("root")

    def app_key(a):
        if intra == "fair":
            return (alloc[a][1], *sub[a])
        if intra == "drf":
            return (dshare(*alloc[a]), *sub[a])
        return sub[a]

    grants = []
    while True:
        done = False
        for leaf in leaf_order():
            for a in sorted((x for x in leaf_apps[leaf] if reqs[x]), key=app_key):
                pr, ct, rid, dv, dm = min(reqs[a])
                if not cap_ok(leaf, dv, dm):
                    continue
                fits = []
                for nid, (cv, cm) in node_cap.items():
                    fv, fm = cv - node_load[nid][0], cm - node_load[nid][1]
                    if dv <= fv and dm <= fm:
                        empty = node_load[nid] == [0, 0]
                        key = (empty, fm, nid) if state.placement == "pack" else (-fm, nid)
                        fits.append((key, nid))
                if not fits:
                    continue
                nid = min(fits)[1]
                node_load[nid][0] += dv
                node_load[nid][1] += dm
                alloc[a][0] += dv
                alloc[a][1] += dm
                reqs[a].remove((pr, ct, rid, dv, dm))
                grants.append((rid, nid, leaf))
                done = True
                break
            if done:
                break
        if not done:
            return grants


def random_workload(rng: random.Random, max_apps=12):
    """A small random cluster, scenario and app list for whole-run fuzzing."""
    from yarnsim.engine import ClusterConfig
    from yarnsim.workload import DurationModel, make_app

    cluster = ClusterConfig(nodes=rng.randint(1, 6))
    scenario = rng.choice([
        ScenarioConfig.named("one_queue"), ScenarioConfig.named("separate_queue"),
        ScenarioConfig.named("merged_queue"), random_scenario(rng),
    ])
    apps = []
    for i in range(rng.randint(0, max_apps)):
        t = float(rng.randint(0, 200))
        kind = rng.choice([AppType.TWO_STAGE, AppType.DAG, AppType.DCG])
        if kind is AppType.TWO_STAGE:
            apps.append(make_app(f"app_{i:03d}", kind, "wordcount", t, rng.choice([128, 256, 1024])))
        else:
            apps.append(make_app(f"app_{i:03d}", kind, "x", t))
    if rng.random() < 0.5:
        apps.append(make_app("stream", AppType.STREAMING, "DirectKafkaWordCount", 0.0))
    durations = DurationModel(
        dag_base_s=rng.choice([20.0, 60.0]), dcg_base_s=rng.choice([30.0, 90.0]),
        noise=rng.choice([0.0, 0.3]),
    )
    return cluster, apps, scenario, durations
