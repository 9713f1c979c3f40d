import random

import pytest

from dcc.diffs import Patch, diff_trees
from dcc.errors import PipelineStageError
from dcc.fixtures import FixtureSpec, gen_fixture, _internal_edit
from dcc.pipeline import run_pipeline
from dcc.smartval import SELECTION_FULL_FALLBACK


def test_empty_diff_zero_feedback(manifest, tree):
    report = run_pipeline(tree, manifest, Patch(), workers=4)
    assert report.feedback_loop_sec == 0
    assert report.ratio == 0
    assert report.dirty_tasks == frozenset()


def test_targeted_commit(manifest, tree):
    diff = diff_trees(tree, tree.with_entries({"b/util.c": "b1\nb2\nb3\n"}))
    report = run_pipeline(tree, manifest, diff, workers=1, commit_id="c42")
    assert report.commit_id == "c42"
    assert report.selection.tests == {"t3"}
    assert report.dirty_tasks == {"m2", "link:T"}
    assert report.build_makespan_sec == 6            # m2(5) + link(1), serial
    assert report.validation_cost_sec == 10
    assert report.feedback_loop_sec == 16
    assert report.baseline_loop_sec == 16 + 40       # all tasks + full suite
    assert report.forward_files == ("b/util.c",)


def test_unmapped_file_full_fallback_ratio_one(manifest, tree):
    # a path no feature glob and no module glob covers
    diff = diff_trees(tree, tree.with_entries({"zzz.c": "z\n"}))
    report = run_pipeline(tree, manifest, diff, workers=1)
    assert report.selection.reason == SELECTION_FULL_FALLBACK
    assert report.dirty_tasks == {"m1", "m2", "link:T"}
    assert report.ratio == 1.0


def test_feedback_never_exceeds_baseline(manifest, tree):
    rng = random.Random(91)
    base = tree
    for i in range(120):
        edited = _internal_edit(rng, base, i)
        diff = diff_trees(base, edited)
        workers = rng.randint(1, 8)
        report = run_pipeline(base, manifest, diff, workers=workers)
        assert report.feedback_loop_sec <= report.baseline_loop_sec + 1e-9
        base = edited


def test_stage_error_is_tagged(manifest, tree):
    stale = diff_trees(tree.with_entries({"a/core.c": "nope\n"}), tree)
    with pytest.raises(PipelineStageError) as exc:
        run_pipeline(tree, manifest, stale, workers=1)
    assert exc.value.stage == "forward_patch"


def test_fixture_commit_is_fast_relative_to_baseline():
    tree, manifest, _ = gen_fixture(3, FixtureSpec(modules=12, features=6, tests=36,
                                                   commits=0, uniform_test_cost=100.0))
    target = tree.with_entries({"m05/core.c": tree["m05/core.c"] + "int extra;\n"})
    diff = diff_trees(tree, target)
    report = run_pipeline(tree, manifest, diff, workers=8)
    assert report.selection.reason == "targeted"
    assert report.ratio < 1.0
