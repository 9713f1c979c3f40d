"""Per-commit pipeline: translate, select, invalidate, schedule, report.

The feedback loop a developer waits on is the simulated incremental
build plus the selected validation cost; the baseline is the full
monolithic rebuild plus the full suite.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import buildsched, dualsync, smartval
from .buildsched import Cache
from .diffs import Patch
from .errors import DccError, PipelineStageError
from .model import Manifest, SourceTree


@dataclass(frozen=True)
class PipelineReport:
    commit_id: str
    forward_files: tuple[str, ...]
    forward_hunks: int
    selection: smartval.TestSelection
    dirty_tasks: frozenset[str]
    build_makespan_sec: float
    validation_cost_sec: float
    feedback_loop_sec: float
    baseline_loop_sec: float
    ratio: float

    def to_data(self) -> dict:
        return {
            "commit_id": self.commit_id,
            "forward_patch": {"files": list(self.forward_files), "hunks": self.forward_hunks},
            "selection": self.selection.to_data(),
            "dirty_tasks": sorted(self.dirty_tasks),
            "build_makespan_sec": self.build_makespan_sec,
            "validation_cost_sec": self.validation_cost_sec,
            "feedback_loop_sec": self.feedback_loop_sec,
            "baseline_loop_sec": self.baseline_loop_sec,
            "ratio": self.ratio,
        }


def _stage(name: str):
    def deco(fn):
        def wrapped(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except DccError as e:
                raise PipelineStageError(name, e) from e
        return wrapped
    return deco


def run_pipeline(tree: SourceTree, manifest: Manifest, diff: Patch,
                 workers: int, commit_id: str = "", cache: Cache | None = None) -> PipelineReport:
    """Compose the per-commit stages into one deterministic report."""
    cache = cache if cache is not None else Cache()

    fwd = _stage("forward_patch")(dualsync.forward_patch)(diff, tree, manifest)
    graph = _stage("trace_graph")(smartval.build_trace_graph)(manifest, tree)
    selection = _stage("select_tests")(smartval.select_tests)(graph, diff)
    task_graph = _stage("plan_tasks")(buildsched.plan_tasks)(manifest, tree)
    dirty = _stage("invalidate")(buildsched.invalidate)(task_graph, diff, cache)
    sched = _stage("schedule")(buildsched.schedule)(task_graph, dirty, workers)

    feedback = sched.makespan_sec + selection.total_cost_sec
    baseline = task_graph.total_cost() + graph.full_cost()
    ratio = feedback / baseline if baseline > 0 else 0.0
    return PipelineReport(
        commit_id=commit_id,
        forward_files=tuple(sorted(fwd.touched_paths())),
        forward_hunks=sum(len(fp.hunks) for fp in fwd.files),
        selection=selection,
        dirty_tasks=frozenset(dirty),
        build_makespan_sec=sched.makespan_sec,
        validation_cost_sec=selection.total_cost_sec,
        feedback_loop_sec=feedback,
        baseline_loop_sec=baseline,
        ratio=ratio,
    )
