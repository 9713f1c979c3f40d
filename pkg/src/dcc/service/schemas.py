"""Request/response models for the toolchain service.

Trees travel as {path: content} objects, manifests as their JSON
document, patches as unified diff text.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class StripRequest(BaseModel):
    content: str
    marker_begin: str
    marker_end: str


class RegionModel(BaseModel):
    path: str = ""
    begin_line: int
    end_line: int


class StripResponse(BaseModel):
    content: str
    regions: list[RegionModel]


class DeriveRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict


class DeriveResponse(BaseModel):
    tree: dict[str, str]
    strip_map: dict[str, list[RegionModel]]


class PatchTranslateRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    patch: str


class PatchResponse(BaseModel):
    patch: str


class RoundtripPatchModel(BaseModel):
    kind: str
    patch: str


class RoundtripRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    patches: list[RoundtripPatchModel]


class RoundtripResponse(BaseModel):
    clean: bool
    steps_replayed: int
    divergence_step: int | None
    divergent_paths: list[str]
    errors: list[dict]


class SelectRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    diff: str


class SelectResponse(BaseModel):
    tests: list[str]
    reason: str
    selected_cost_sec: float
    full_cost_sec: float
    ratio: float


class BuildPlanRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict


class TaskModel(BaseModel):
    id: str
    deps: list[str]
    cost_sec: float
    files: list[str]
    input_hash: str


class BuildPlanResponse(BaseModel):
    tasks: list[TaskModel]
    warnings: list[str]


class BuildSimRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    diff: str = ""
    workers: int = 1
    cache: dict[str, str] = Field(default_factory=dict)
    #: rebuild everything regardless of the diff
    full: bool = False


class AssignmentModel(BaseModel):
    task: str
    worker: int
    start_sec: float
    end_sec: float


class BuildSimResponse(BaseModel):
    makespan_sec: float
    assignments: list[AssignmentModel]
    cache_hits: list[str]
    dirty: list[str]
    monolithic_sec: float
    speedup: float | None
    cache: dict[str, str]


class TailorRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    config: dict


class TailorResponse(BaseModel):
    tree: dict[str, str]


class ScaffoldRequest(BaseModel):
    manifest: dict
    soc_id: str
    family: str
    manifest_text: str | None = None
    tree: dict[str, str] = Field(default_factory=dict)


class ScaffoldResponse(BaseModel):
    creates: dict[str, str]
    edits: dict[str, str]
    impact_count: int
    impacted_features: list[str]
    impacted_tests: list[str]
    cross_soc_overlap: list[str]


class PipelineRequest(BaseModel):
    tree: dict[str, str]
    manifest: dict
    diff: str
    workers: int = 1
    commit_id: str = ""


class PipelineResponse(BaseModel):
    commit_id: str
    forward_patch: dict
    selection: dict
    dirty_tasks: list[str]
    build_makespan_sec: float
    validation_cost_sec: float
    feedback_loop_sec: float
    baseline_loop_sec: float
    ratio: float


class LateCommitRequest(BaseModel):
    history: list[dict]
    milestones: list[str]
    window_days: float = 14.0


class LateCommitResponse(BaseModel):
    ratio: float
    total_commits: int


class MergeLagRequest(BaseModel):
    history: list[dict]


class MergeLagResponse(BaseModel):
    mean_sec: float | None
    median_sec: float | None
    max_sec: float | None
    merged_count: int
    unmerged_count: int


class FixtureRequest(BaseModel):
    seed: int
    params: dict = Field(default_factory=dict)


class FixtureResponse(BaseModel):
    tree: dict[str, str]
    manifest: dict
    commits: list[dict]


class ErrorResponse(BaseModel):
    error: str
    message: str
