import hashlib
import json

from dcc.diffs import format_patch
from dcc.dualsync import check_round_trip
from dcc.fixtures import ACCEPTANCE_SPEC, FixtureSpec, gen_fixture
from dcc.model import validate_tree


def _digest(seed, spec):
    tree, manifest, commits = gen_fixture(seed, spec)
    payload = json.dumps([
        tree.to_data(), manifest.to_data(),
        [(c.kind, c.record.to_data(), format_patch(c.patch)) for c in commits],
    ], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def test_same_seed_identical_output():
    spec = FixtureSpec(commits=25)
    assert _digest(1, spec) == _digest(1, spec)


def test_different_seeds_differ():
    spec = FixtureSpec(commits=25)
    assert _digest(1, spec) != _digest(2, spec)


def test_zero_community_ratio_means_no_open_commits():
    _, _, commits = gen_fixture(4, FixtureSpec(commits=40, community_ratio=0.0))
    assert all(c.kind == "internal" for c in commits)
    assert all(c.record.path_kind == "internal" for c in commits)


def test_generated_tree_is_marker_clean():
    tree, manifest, _ = gen_fixture(2, FixtureSpec(commits=0))
    report = validate_tree(manifest, tree)
    marker_kinds = {"UnbalancedMarker", "NestedMarker", "MarkerInOpenFile", "NoRuleMatch"}
    assert [f for f in report.findings if f.kind in marker_kinds] == []


def test_manifest_matches_spec_sizes():
    tree, manifest, _ = gen_fixture(1, ACCEPTANCE_SPEC)
    assert len(manifest.modules) == 40
    assert len(manifest.targets) == 4
    assert len(manifest.features) == 20
    assert len(manifest.tests) == 200
    assert all(t.cost_sec == 180.0 for t in manifest.tests)


def test_stream_replays_clean():
    tree, manifest, commits = gen_fixture(8, FixtureSpec(modules=6, features=3, tests=9,
                                                         commits=50, community_ratio=0.1))
    report = check_round_trip(tree, manifest, [(c.kind, c.patch) for c in commits])
    assert report.clean and not report.errors


def test_records_carry_touched_files():
    _, _, commits = gen_fixture(5, FixtureSpec(commits=20))
    for c in commits:
        assert tuple(sorted(c.patch.touched_paths())) == c.record.files


def test_concurrent_derivation_is_deterministic():
    # pure functions over immutable trees: parallel calls must agree
    from concurrent.futures import ThreadPoolExecutor

    from dcc.dualsync import derive_open_subset
    from dcc.smartval import build_trace_graph, select_tests
    from dcc.diffs import diff_trees

    tree, manifest, commits = gen_fixture(6, FixtureSpec(commits=10))
    graph = build_trace_graph(manifest, tree)

    def derive_once(_):
        return derive_open_subset(tree, manifest)[0].to_data()

    def select_once(commit):
        return select_tests(graph, commit.patch).to_data()

    with ThreadPoolExecutor(max_workers=8) as pool:
        derived = list(pool.map(derive_once, range(16)))
        selections = list(pool.map(select_once, commits))
    assert all(d == derived[0] for d in derived)
    assert selections == [select_tests(graph, c.patch).to_data() for c in commits]
