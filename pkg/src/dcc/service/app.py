"""FastAPI service exposing the toolchain to CI clients.

Every endpoint is a thin wrapper over a handler function; the CLI calls
the same handlers in-process, so service and CLI cannot drift.
"""

from __future__ import annotations

import functools

from fastapi import FastAPI, HTTPException

from .. import buildsched, dualsync, fixtures, metrics, pipeline, smartval, tailor
from ..diffs import apply_patch, format_patch, parse_patch
from ..errors import DccError
from ..model import SourceTree, load_manifest_data
from . import schemas as s


def _tree(data: dict[str, str]) -> SourceTree:
    return SourceTree(data)


def handle_strip(req: s.StripRequest) -> s.StripResponse:
    content, regions = dualsync.strip_file(req.content, req.marker_begin, req.marker_end)
    return s.StripResponse(content=content, regions=[
        s.RegionModel(path=r.path, begin_line=r.begin_line, end_line=r.end_line)
        for r in regions])


def handle_derive(req: s.DeriveRequest) -> s.DeriveResponse:
    manifest = load_manifest_data(req.manifest)
    derived, strip_map = dualsync.derive_open_subset(_tree(req.tree), manifest)
    return s.DeriveResponse(
        tree=derived.to_data(),
        strip_map={
            path: [s.RegionModel(path=r.path, begin_line=r.begin_line, end_line=r.end_line)
                   for r in info.regions]
            for path, info in strip_map.items()
        })


def handle_forward(req: s.PatchTranslateRequest) -> s.PatchResponse:
    manifest = load_manifest_data(req.manifest)
    out = dualsync.forward_patch(parse_patch(req.patch), _tree(req.tree), manifest)
    return s.PatchResponse(patch=format_patch(out))


def handle_port_back(req: s.PatchTranslateRequest) -> s.PatchResponse:
    manifest = load_manifest_data(req.manifest)
    out = dualsync.port_back(parse_patch(req.patch), _tree(req.tree), manifest)
    return s.PatchResponse(patch=format_patch(out))


def handle_roundtrip(req: s.RoundtripRequest) -> s.RoundtripResponse:
    manifest = load_manifest_data(req.manifest)
    patches = [(p.kind, parse_patch(p.patch)) for p in req.patches]
    report = dualsync.check_round_trip(_tree(req.tree), manifest, patches)
    return s.RoundtripResponse(**report.to_data())


def handle_select(req: s.SelectRequest) -> s.SelectResponse:
    manifest = load_manifest_data(req.manifest)
    graph = smartval.build_trace_graph(manifest, _tree(req.tree))
    selection = smartval.select_tests(graph, parse_patch(req.diff))
    savings = smartval.selection_report(selection, graph)
    return s.SelectResponse(tests=sorted(selection.tests), reason=selection.reason,
                            selected_cost_sec=savings.selected_cost_sec,
                            full_cost_sec=savings.full_cost_sec, ratio=savings.ratio)


def handle_build_plan(req: s.BuildPlanRequest) -> s.BuildPlanResponse:
    manifest = load_manifest_data(req.manifest)
    graph = buildsched.plan_tasks(manifest, _tree(req.tree))
    data = graph.to_data()
    return s.BuildPlanResponse(tasks=[s.TaskModel(**t) for t in data["tasks"]],
                               warnings=data["warnings"])


def handle_build_sim(req: s.BuildSimRequest) -> s.BuildSimResponse:
    manifest = load_manifest_data(req.manifest)
    tree = _tree(req.tree)
    graph = buildsched.plan_tasks(manifest, tree)
    cache = buildsched.Cache(req.cache)
    diff = parse_patch(req.diff)
    if req.full:
        dirty = set(graph.tasks)
    else:
        dirty = buildsched.invalidate(graph, diff, cache)
    sched = buildsched.schedule(graph, dirty, req.workers)
    report = buildsched.speedup_report(graph, dirty, req.workers)
    # the simulated build produced artifacts for the post-diff tree
    built = buildsched.plan_tasks(manifest, apply_patch(tree, diff))
    for task in built.tasks.values():
        cache[task.input_hash] = task.id
    data = sched.to_data()
    return s.BuildSimResponse(
        makespan_sec=data["makespan_sec"],
        assignments=[s.AssignmentModel(**a) for a in data["assignments"]],
        cache_hits=data["cache_hits"], dirty=sorted(dirty),
        monolithic_sec=report.monolithic_sec, speedup=report.speedup,
        cache=dict(cache))


def handle_tailor(req: s.TailorRequest) -> s.TailorResponse:
    manifest = load_manifest_data(req.manifest)
    config = tailor.ReleaseConfig.from_data(req.config)
    out = tailor.tailor_tree(_tree(req.tree), manifest, config)
    return s.TailorResponse(tree=out.to_data())


def handle_scaffold(req: s.ScaffoldRequest) -> s.ScaffoldResponse:
    manifest = load_manifest_data(req.manifest)
    plan = tailor.scaffold_soc(manifest, req.soc_id, req.family, req.manifest_text)
    graph = smartval.build_trace_graph(manifest, _tree(req.tree))
    impact = tailor.impact_report(plan, graph, manifest)
    return s.ScaffoldResponse(
        creates=dict(plan.creates),
        edits={path: format_patch(p) for path, p in plan.edits},
        impact_count=plan.impact_count,
        impacted_features=sorted(impact.impacted_features),
        impacted_tests=sorted(impact.impacted_tests),
        cross_soc_overlap=sorted(impact.cross_soc_overlap))


def handle_pipeline(req: s.PipelineRequest) -> s.PipelineResponse:
    manifest = load_manifest_data(req.manifest)
    report = pipeline.run_pipeline(_tree(req.tree), manifest, parse_patch(req.diff),
                                   req.workers, req.commit_id)
    return s.PipelineResponse(**report.to_data())


def handle_metrics_late(req: s.LateCommitRequest) -> s.LateCommitResponse:
    history = [metrics.CommitRecord.from_data(r) for r in req.history]
    milestones = [metrics.parse_instant(m) for m in req.milestones]
    ratio = metrics.late_commit_ratio(history, milestones, req.window_days)
    return s.LateCommitResponse(ratio=ratio, total_commits=len(history))


def handle_metrics_lag(req: s.MergeLagRequest) -> s.MergeLagResponse:
    history = [metrics.CommitRecord.from_data(r) for r in req.history]
    return s.MergeLagResponse(**metrics.merge_lag(history).to_data())


def handle_fixture(req: s.FixtureRequest) -> s.FixtureResponse:
    spec = fixtures.FixtureSpec.from_data(req.params)
    tree, manifest, commits = fixtures.gen_fixture(req.seed, spec)
    return s.FixtureResponse(
        tree=tree.to_data(), manifest=manifest.to_data(),
        commits=[{**c.record.to_data(), "kind": c.kind, "patch": format_patch(c.patch)}
                 for c in commits])


app = FastAPI(title="dcc service",
              description="Delivery-cost-control toolchain for dimension-tagged code bases",
              version="0.1.0")


def _api(fn):
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DccError as e:
            raise HTTPException(status_code=400,
                                detail={"error": type(e).__name__, "message": str(e)})
    return wrapped


@app.get("/health")
def health():
    return {"status": "ok", "service": "dcc", "version": "0.1.0"}


@app.post("/strip", response_model=s.StripResponse)
@_api
def strip(req: s.StripRequest):
    return handle_strip(req)


@app.post("/derive", response_model=s.DeriveResponse)
@_api
def derive(req: s.DeriveRequest):
    return handle_derive(req)


@app.post("/patch/forward", response_model=s.PatchResponse)
@_api
def patch_forward(req: s.PatchTranslateRequest):
    return handle_forward(req)


@app.post("/patch/back", response_model=s.PatchResponse)
@_api
def patch_back(req: s.PatchTranslateRequest):
    return handle_port_back(req)


@app.post("/roundtrip", response_model=s.RoundtripResponse)
@_api
def roundtrip(req: s.RoundtripRequest):
    return handle_roundtrip(req)


@app.post("/select", response_model=s.SelectResponse)
@_api
def select(req: s.SelectRequest):
    return handle_select(req)


@app.post("/build/plan", response_model=s.BuildPlanResponse)
@_api
def build_plan(req: s.BuildPlanRequest):
    return handle_build_plan(req)


@app.post("/build/sim", response_model=s.BuildSimResponse)
@_api
def build_sim(req: s.BuildSimRequest):
    return handle_build_sim(req)


@app.post("/tailor", response_model=s.TailorResponse)
@_api
def tailor_release(req: s.TailorRequest):
    return handle_tailor(req)


@app.post("/scaffold-soc", response_model=s.ScaffoldResponse)
@_api
def scaffold(req: s.ScaffoldRequest):
    return handle_scaffold(req)


@app.post("/pipeline", response_model=s.PipelineResponse)
@_api
def run_pipeline(req: s.PipelineRequest):
    return handle_pipeline(req)


@app.post("/metrics/late", response_model=s.LateCommitResponse)
@_api
def metrics_late(req: s.LateCommitRequest):
    return handle_metrics_late(req)


@app.post("/metrics/lag", response_model=s.MergeLagResponse)
@_api
def metrics_lag(req: s.MergeLagRequest):
    return handle_metrics_lag(req)


@app.post("/fixture", response_model=s.FixtureResponse)
@_api
def fixture(req: s.FixtureRequest):
    return handle_fixture(req)
