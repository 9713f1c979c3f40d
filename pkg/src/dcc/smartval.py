"""Change-based test selection over file -> feature -> test traceability.

Selection degrades to correctness, not speed: any touched path with no
feature mapping forces the full suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .diffs import Patch
from .globs import glob_match
from .model import Manifest, SourceTree


@dataclass(frozen=True)
class TraceGraph:
    file_to_features: Mapping[str, frozenset[str]]
    feature_to_tests: Mapping[str, frozenset[str]]
    test_costs: Mapping[str, float]
    #: feature id -> globs, used to classify paths created by a diff.
    feature_globs: Mapping[str, tuple[str, ...]]

    def features_of(self, path: str) -> frozenset[str]:
        """Features of a path; falls back to glob matching for paths
        that were not in the graph's base tree (creations)."""
        known = self.file_to_features.get(path)
        if known is not None:
            return known
        return frozenset(
            fid for fid, globs in self.feature_globs.items()
            if any(glob_match(g, path) for g in globs))

    def all_tests(self) -> frozenset[str]:
        return frozenset(self.test_costs)

    def full_cost(self) -> float:
        return sum(self.test_costs.values())


SELECTION_TARGETED = "targeted"
SELECTION_FULL_FALLBACK = "full_fallback"
SELECTION_EMPTY = "empty"


@dataclass(frozen=True)
class TestSelection:
    tests: frozenset[str]
    total_cost_sec: float
    reason: str

    def to_data(self) -> dict:
        return {"tests": sorted(self.tests), "reason": self.reason,
                "total_cost_sec": self.total_cost_sec}


@dataclass(frozen=True)
class SavingsReport:
    selected_cost_sec: float
    full_cost_sec: float
    ratio: float

    def to_data(self) -> dict:
        return {"selected_cost_sec": self.selected_cost_sec,
                "full_cost_sec": self.full_cost_sec, "ratio": self.ratio}


def build_trace_graph(manifest: Manifest, tree: SourceTree) -> TraceGraph:
    """Map every tree file to the features whose globs match it and
    invert the test coverage declarations."""
    feature_globs = {f.id: f.globs for f in manifest.features}
    file_to_features = {
        path: frozenset(
            fid for fid, globs in feature_globs.items()
            if any(glob_match(g, path) for g in globs))
        for path in tree.paths()
    }
    feature_to_tests: dict[str, set[str]] = {f.id: set() for f in manifest.features}
    for test in manifest.tests:
        for fid in test.features:
            feature_to_tests[fid].add(test.id)
    return TraceGraph(
        file_to_features,
        {fid: frozenset(tids) for fid, tids in feature_to_tests.items()},
        {t.id: t.cost_sec for t in manifest.tests},
        feature_globs,
    )


def impacted_features(graph: TraceGraph, diff: Patch) -> frozenset[str]:
    out: set[str] = set()
    for path in diff.touched_paths():
        out |= graph.features_of(path)
    return frozenset(out)


def select_tests(graph: TraceGraph, diff: Patch) -> TestSelection:
    """Minimal sound selection for a commit diff.

    A hunk anywhere in a file impacts all of the file's features; a
    touched path with no feature mapping falls back to the full suite.
    """
    touched = diff.touched_paths()
    if not touched:
        return TestSelection(frozenset(), 0.0, SELECTION_EMPTY)
    if any(not graph.features_of(path) for path in touched):
        tests = graph.all_tests()
        return TestSelection(tests, sum(graph.test_costs[t] for t in tests),
                             SELECTION_FULL_FALLBACK)
    tests: set[str] = set()
    for feature in impacted_features(graph, diff):
        tests |= graph.feature_to_tests.get(feature, frozenset())
    return TestSelection(frozenset(tests), sum(graph.test_costs[t] for t in tests),
                         SELECTION_TARGETED)


def selection_report(selection: TestSelection, graph: TraceGraph) -> SavingsReport:
    full = graph.full_cost()
    ratio = selection.total_cost_sec / full if full > 0 else 0.0
    return SavingsReport(selection.total_cost_sec, full, ratio)
