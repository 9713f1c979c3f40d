"""Module-task DAG planning, content-hash invalidation and list scheduling.

Scheduling runs on logical time from declared costs: the decomposition,
reuse and parallelism effects are what matter, and logical time makes
them deterministic.  Hashes are SHA-256 over normalized bytes with a
fixed composition order, so identical trees hash identically everywhere.
"""

from __future__ import annotations

import hashlib
import heapq
import json
from dataclasses import dataclass, field

from .diffs import Patch, apply_patch
from .model import Manifest, SourceTree, module_owner

LINK_PREFIX = "link:"


@dataclass(frozen=True)
class BuildTask:
    id: str
    deps: frozenset[str]
    cost_sec: float
    files: tuple[str, ...]
    input_hash: str


@dataclass(frozen=True)
class TaskGraph:
    tasks: dict[str, BuildTask]
    topo_order: tuple[str, ...]
    tree: SourceTree
    manifest: Manifest
    #: module ids whose globs matched no file (planned anyway).
    warnings: tuple[str, ...] = ()

    def dependents(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {tid: set() for tid in self.tasks}
        for task in self.tasks.values():
            for dep in task.deps:
                out[dep].add(task.id)
        return out

    def total_cost(self) -> float:
        return sum(t.cost_sec for t in self.tasks.values())

    def to_data(self) -> dict:
        return {
            "tasks": [
                {"id": t.id, "deps": sorted(t.deps), "cost_sec": t.cost_sec,
                 "files": list(t.files), "input_hash": t.input_hash}
                for t in (self.tasks[tid] for tid in self.topo_order)
            ],
            "warnings": list(self.warnings),
        }


class Cache(dict):
    """input_hash -> opaque artifact token; unbounded within a run."""

    @classmethod
    def load(cls, text: str) -> "Cache":
        data = json.loads(text) if text.strip() else {}
        return cls(data)

    def dump(self) -> str:
        return json.dumps(dict(sorted(self.items())), indent=2) + "\n"


def _ownership(manifest: Manifest, tree: SourceTree) -> dict[str, list[str]]:
    owned: dict[str, list[str]] = {m.id: [] for m in manifest.modules}
    for path in tree.paths():
        owner = module_owner(manifest, path)
        if owner is not None:
            owned[owner].append(path)
    return owned


def _content_digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


def _compute_hashes(manifest: Manifest, tree: SourceTree,
                    owned: dict[str, list[str]],
                    deps: dict[str, frozenset[str]],
                    topo: list[str]) -> dict[str, str]:
    hashes: dict[str, str] = {}
    for tid in topo:
        parts = []
        for path in sorted(owned.get(tid, [])):
            parts.append(f"F {path} {_content_digest(tree[path])}")
        for dep in sorted(deps[tid]):
            parts.append(f"D {dep} {hashes[dep]}")
        payload = "\n".join(parts).encode("utf-8")
        hashes[tid] = hashlib.sha256(payload).hexdigest()
    return hashes


def _topo_sort(deps: dict[str, frozenset[str]]) -> list[str]:
    indeg = {tid: len(ds) for tid, ds in deps.items()}
    dependents: dict[str, list[str]] = {tid: [] for tid in deps}
    for tid, ds in deps.items():
        for d in ds:
            dependents[d].append(tid)
    heap = [tid for tid, n in indeg.items() if n == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        cur = heapq.heappop(heap)
        order.append(cur)
        for nxt in sorted(dependents[cur]):
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, nxt)
    assert len(order) == len(deps), "cycle in task deps"
    return order


def plan_tasks(manifest: Manifest, tree: SourceTree) -> TaskGraph:
    """One task per module plus one link task per target.

    Input hashes are computed bottom-up: sorted (path, content digest)
    pairs of owned files, then dependency hashes in id order, re-digested.
    """
    owned = _ownership(manifest, tree)
    deps: dict[str, frozenset[str]] = {}
    costs: dict[str, float] = {}
    for mod in manifest.modules:
        deps[mod.id] = frozenset(mod.deps)
        costs[mod.id] = mod.cost_sec
    for tgt in manifest.targets:
        tid = LINK_PREFIX + tgt.id
        deps[tid] = frozenset(tgt.modules)
        costs[tid] = tgt.link_cost_sec
    topo = _topo_sort(deps)
    hashes = _compute_hashes(manifest, tree, owned, deps, topo)
    tasks = {
        tid: BuildTask(tid, deps[tid], costs[tid], tuple(sorted(owned.get(tid, []))), hashes[tid])
        for tid in topo
    }
    warnings = tuple(m.id for m in manifest.modules if not owned[m.id])
    return TaskGraph(tasks, tuple(topo), tree, manifest, warnings)


def invalidate(graph: TaskGraph, diff: Patch, cache: Cache) -> set[str]:
    """Dirty set for a diff: owners of touched files plus transitive
    dependents, minus tasks whose recomputed hash hits the cache.

    A touched file owned by no module dirties everything and bypasses
    the cache: the decomposition cannot be trusted for that file.
    """
    touched = diff.touched_paths()
    if not touched:
        return set()
    owners: set[str] = set()
    for path in touched:
        owner = module_owner(graph.manifest, path)
        if owner is None:
            return set(graph.tasks)
        owners.add(owner)

    dependents = graph.dependents()
    dirty = set(owners)
    frontier = list(owners)
    while frontier:
        cur = frontier.pop()
        for nxt in dependents[cur]:
            if nxt not in dirty:
                dirty.add(nxt)
                frontier.append(nxt)

    new_tree = apply_patch(graph.tree, diff)
    owned = _ownership(graph.manifest, new_tree)
    deps = {tid: t.deps for tid, t in graph.tasks.items()}
    new_hashes = _compute_hashes(graph.manifest, new_tree, owned, deps, list(graph.topo_order))
    return {tid for tid in dirty if new_hashes[tid] not in cache}


@dataclass(frozen=True)
class Assignment:
    task: str
    worker: int
    start_sec: float
    end_sec: float


@dataclass
class Schedule:
    assignments: list[Assignment]
    makespan_sec: float
    cache_hits: list[str] = field(default_factory=list)

    def to_data(self) -> dict:
        ordered = sorted(self.assignments, key=lambda a: (a.start_sec, a.worker))
        return {
            "makespan_sec": self.makespan_sec,
            "assignments": [
                {"task": a.task, "worker": a.worker, "start_sec": a.start_sec, "end_sec": a.end_sec}
                for a in ordered
            ],
            "cache_hits": sorted(self.cache_hits),
        }


def _exit_priorities(graph: TaskGraph, dirty: set[str]) -> dict[str, float]:
    """Longest dirty-cost-weighted path from each task to any exit."""
    prio: dict[str, float] = {}
    dependents = graph.dependents()
    for tid in reversed(graph.topo_order):
        own = graph.tasks[tid].cost_sec if tid in dirty else 0.0
        prio[tid] = own + max((prio[d] for d in dependents[tid]), default=0.0)
    return prio


def critical_path(graph: TaskGraph, dirty: set[str]) -> float:
    prios = _exit_priorities(graph, dirty)
    starts = [prios[tid] for tid in graph.tasks if tid in dirty]
    return max(starts, default=0.0)


def schedule(graph: TaskGraph, dirty: set[str], workers: int) -> Schedule:
    """Deterministic list schedule on logical time.

    When a worker frees, the ready dirty task with the longest
    critical-path-to-exit runs next, ties broken by id.  Clean tasks
    complete instantly at readiness and never occupy a worker.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    prio = _exit_priorities(graph, dirty)
    remaining_deps = {tid: set(t.deps) for tid, t in graph.tasks.items()}
    dependents = graph.dependents()
    finish: dict[str, float] = {}
    ready: list[tuple[float, str]] = []  # (-priority, id)
    running: list[tuple[float, int, str]] = []  # (end, worker, id)
    free_workers = list(range(workers))
    heapq.heapify(free_workers)
    assignments: list[Assignment] = []
    now = 0.0

    def settle(tid: str, end: float) -> None:
        finish[tid] = end
        for nxt in sorted(dependents[tid]):
            remaining_deps[nxt].discard(tid)
            if not remaining_deps[nxt]:
                make_ready(nxt, end)

    def make_ready(tid: str, at: float) -> None:
        ready_at = max([finish[d] for d in graph.tasks[tid].deps], default=0.0)
        if tid not in dirty:
            # cache hit or untouched: completes immediately
            settle(tid, max(at, ready_at))
        else:
            heapq.heappush(ready, (-prio[tid], tid))

    for tid in graph.topo_order:
        if not graph.tasks[tid].deps:
            make_ready(tid, 0.0)

    while ready or running:
        while ready and free_workers:
            _, tid = heapq.heappop(ready)
            worker = heapq.heappop(free_workers)
            start = now
            end = start + graph.tasks[tid].cost_sec
            assignments.append(Assignment(tid, worker, start, end))
            heapq.heappush(running, (end, worker, tid))
        if not running:
            break
        end, worker, tid = heapq.heappop(running)
        now = end
        heapq.heappush(free_workers, worker)
        settle(tid, end)
        # drain co-terminating tasks so readiness is consistent at `now`
        while running and running[0][0] == now:
            end2, worker2, tid2 = heapq.heappop(running)
            heapq.heappush(free_workers, worker2)
            settle(tid2, end2)

    makespan = max((a.end_sec for a in assignments), default=0.0)
    hits = [tid for tid in graph.tasks if tid not in dirty]
    return Schedule(assignments, makespan, hits)


@dataclass(frozen=True)
class SpeedupReport:
    monolithic_sec: float
    scheduled_sec: float
    speedup: float | None  # None when nothing was dirty
    workers: int
    dirty_count: int

    @property
    def clean(self) -> bool:
        return self.speedup is None

    def to_data(self) -> dict:
        return {
            "monolithic_sec": self.monolithic_sec,
            "scheduled_sec": self.scheduled_sec,
            "speedup": "clean" if self.clean else self.speedup,
            "workers": self.workers,
            "dirty_count": self.dirty_count,
        }


def speedup_report(graph: TaskGraph, dirty: set[str], workers: int) -> SpeedupReport:
    """Incremental scheduled time versus the undecomposed full rebuild."""
    monolithic = graph.total_cost()
    scheduled = schedule(graph, dirty, workers).makespan_sec
    speedup = monolithic / scheduled if scheduled > 0 else None
    return SpeedupReport(monolithic, scheduled, speedup, workers, len(dirty))
