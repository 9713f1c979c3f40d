import itertools
import json

import pytest

from dcc.errors import CycleError, DanglingReferenceError, ParseError, SchemaError
from dcc.globs import glob_match
from dcc.model import (
    FINDING_MARKER_IN_OPEN,
    FINDING_NO_MODULE,
    FINDING_NO_RULE,
    FINDING_UNBALANCED,
    SourceTree,
    load_manifest,
    load_manifest_data,
    module_owner,
    tags_of,
    validate_tree,
)

from conftest import BEGIN, END, manifest_data


MINIMAL = {
    "marker": {"begin": "//B", "end": "//E"},
    "rules": [{"pattern": "**", "visibility": "open"}],
}


class TestLoadManifest:
    def test_minimal_document(self):
        m = load_manifest(json.dumps(MINIMAL))
        assert len(m.rules) == 1
        assert m.modules == ()
        assert m.rules[0].tags.visibility == "open"

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            load_manifest("{not json")

    def test_unknown_key_is_strict(self):
        with pytest.raises(SchemaError):
            load_manifest_data({**MINIMAL, "extra": 1})

    def test_missing_required_key(self):
        with pytest.raises(SchemaError):
            load_manifest_data({"rules": []})

    def test_bad_visibility(self):
        with pytest.raises(SchemaError):
            load_manifest_data({**MINIMAL, "rules": [{"pattern": "**", "visibility": "public"}]})

    def test_dangling_module_dep(self):
        data = {**MINIMAL, "modules": [
            {"id": "m2", "globs": ["b/**"], "deps": ["m9"], "cost_sec": 1}]}
        with pytest.raises(DanglingReferenceError):
            load_manifest_data(data)

    def test_module_dep_cycle(self):
        data = {**MINIMAL, "modules": [
            {"id": "m1", "globs": ["a/**"], "deps": ["m2"], "cost_sec": 1},
            {"id": "m2", "globs": ["b/**"], "deps": ["m1"], "cost_sec": 1}]}
        with pytest.raises(CycleError):
            load_manifest_data(data)

    def test_duplicate_ids(self):
        data = {**MINIMAL, "modules": [
            {"id": "m1", "globs": ["a/**"], "cost_sec": 1},
            {"id": "m1", "globs": ["b/**"], "cost_sec": 1}]}
        with pytest.raises(SchemaError):
            load_manifest_data(data)

    def test_rule_tag_outside_vocabulary(self):
        data = {**MINIMAL, "rules": [{"pattern": "**", "visibility": "open", "soc": ["sX"]}]}
        with pytest.raises(DanglingReferenceError):
            load_manifest_data(data)

    def test_test_references_unknown_feature(self):
        data = {**MINIMAL, "tests": [{"id": "t1", "features": ["fX"], "cost_sec": 1}]}
        with pytest.raises(DanglingReferenceError):
            load_manifest_data(data)

    def test_negative_cost(self):
        data = {**MINIMAL, "modules": [{"id": "m1", "globs": ["a/**"], "cost_sec": -1}]}
        with pytest.raises(SchemaError):
            load_manifest_data(data)

    def test_marker_strings_must_differ(self):
        with pytest.raises(SchemaError):
            load_manifest_data({"marker": {"begin": "//M", "end": "//M"}, "rules": []})

    def test_roundtrip_to_data(self):
        m = load_manifest_data(manifest_data())
        assert load_manifest(m.to_json()).to_data() == m.to_data()


class TestGlobs:
    @pytest.mark.parametrize("pattern,path,expected", [
        ("**", "a/b/c.c", True),
        ("soc/s1/**", "soc/s1/init.c", True),
        ("soc/s1/**", "soc/s1/deep/x.c", True),
        ("soc/s1/**", "soc/s2/init.c", False),
        ("*.c", "x.c", True),
        ("*.c", "a/x.c", False),  # single star stays inside a segment
        ("a/*.c", "a/x.c", True),
        ("a/*.c", "a/b/x.c", False),
        ("**/impl.c", "m1/impl.c", True),
        ("**/impl.c", "impl.cc", False),
    ])
    def test_semantics(self, pattern, path, expected):
        assert glob_match(pattern, path) is expected


class TestTagsOf:
    def test_first_match_wins(self):
        m = load_manifest_data({
            "marker": {"begin": "//B", "end": "//E"},
            "axes": {"soc": ["s1"]},
            "rules": [
                {"pattern": "soc/s1/**", "visibility": "open", "soc": ["s1"]},
                {"pattern": "**", "visibility": "open"},
            ]})
        tags = tags_of(m, "soc/s1/init.c")
        assert tags.visibility == "open"
        assert tags.soc == {"s1"}

    def test_fallthrough_rule(self):
        m = load_manifest_data({
            "marker": {"begin": "//B", "end": "//E"},
            "axes": {"soc": ["s1"]},
            "rules": [
                {"pattern": "soc/s1/**", "visibility": "open", "soc": ["s1"]},
                {"pattern": "**", "visibility": "open"},
            ]})
        tags = tags_of(m, "common/util.c")
        assert tags.visibility == "open"
        assert not tags.soc and not tags.os and not tags.feature

    def test_fail_closed_default(self):
        m = load_manifest_data({**MINIMAL, "rules": [{"pattern": "src/**", "visibility": "open"}]})
        tags = tags_of(m, "secret/k.c")
        assert tags.visibility == "internal"
        assert not tags.soc

    def test_total_and_deterministic(self, manifest, tree):
        for path in tree.paths():
            assert tags_of(manifest, path) == tags_of(manifest, path)
            assert tags_of(manifest, path).visibility in ("open", "internal", "mixed")

    def test_disjoint_rule_permutation_invariant(self):
        # non-overlapping patterns: order must not matter
        rules = [
            {"pattern": "a/**", "visibility": "open"},
            {"pattern": "b/**", "visibility": "internal"},
            {"pattern": "c/**", "visibility": "mixed"},
        ]
        paths = ["a/x.c", "b/y.c", "c/z.c", "d/w.c"]
        baseline = None
        for perm in itertools.permutations(rules):
            m = load_manifest_data({"marker": {"begin": "//B", "end": "//E"},
                                    "rules": list(perm)})
            got = [tags_of(m, p) for p in paths]
            if baseline is None:
                baseline = got
            assert got == baseline


class TestModuleOwnership:
    def test_earlier_module_wins(self):
        m = load_manifest_data({**MINIMAL, "modules": [
            {"id": "m1", "globs": ["src/**"], "cost_sec": 1},
            {"id": "m2", "globs": ["src/sub/**"], "cost_sec": 1}]})
        assert module_owner(m, "src/sub/x.c") == "m1"

    def test_partition(self, manifest, tree):
        for path in tree.paths():
            owners = [mod.id for mod in manifest.modules
                      if module_owner(manifest, path) == mod.id]
            assert len(owners) <= 1


class TestSourceTree:
    def test_rejects_traversal_segments(self):
        with pytest.raises(ParseError):
            SourceTree({"../escape.c": "x\n"})
        with pytest.raises(ParseError):
            SourceTree({"a/./b.c": "x\n"})
        with pytest.raises(ParseError):
            SourceTree({"/abs.c": "x\n"})

    def test_rejects_binary(self):
        with pytest.raises(ParseError):
            SourceTree({"blob.bin": "a\x00b"})

    def test_normalizes_line_endings(self):
        t = SourceTree({"f.c": "a\r\nb\rc"})
        assert t["f.c"] == "a\nb\nc\n"

    def test_lexicographic_iteration(self):
        t = SourceTree({"z.c": "z\n", "a.c": "a\n", "m/x.c": "x\n"})
        assert t.paths() == ["a.c", "m/x.c", "z.c"]

    def test_from_dir_skips_hidden_and_manifest(self, tmp_path):
        (tmp_path / ".git").mkdir()
        (tmp_path / ".git" / "HEAD").write_text("ref\n")
        (tmp_path / "dcc.json").write_text("{}\n")
        (tmp_path / "src").mkdir()
        (tmp_path / "src" / "a.c").write_text("a\n")
        t = SourceTree.from_dir(str(tmp_path))
        assert t.paths() == ["src/a.c"]

    def test_write_dir_roundtrip(self, tmp_path, tree):
        tree.write_dir(str(tmp_path))
        assert SourceTree.from_dir(str(tmp_path)) == tree


class TestValidateTree:
    def test_clean_tree(self, manifest, tree):
        report = validate_tree(manifest, tree)
        marker_findings = [f for f in report.findings
                           if f.kind not in (FINDING_NO_MODULE,)]
        assert marker_findings == []

    def test_marker_in_open_file(self, manifest):
        # derived by applying the rule table by hand to a 3-file tree:
        # only the open-visibility file with a marker is flagged
        t = SourceTree({
            "a/core.c": "x\n" + BEGIN + "\ny\n" + END + "\n",
            "a/impl.c": BEGIN + "\nz\n" + END + "\n",
            "internal/k.c": "k\n",
        })
        report = validate_tree(manifest, t)
        flagged = [f.path for f in report.of_kind(FINDING_MARKER_IN_OPEN)]
        assert flagged == ["a/core.c"]

    def test_unbalanced_marker(self, manifest):
        t = SourceTree({"a/impl.c": BEGIN + "\nz\n"})
        report = validate_tree(manifest, t)
        assert [f.path for f in report.of_kind(FINDING_UNBALANCED)] == ["a/impl.c"]

    def test_unmatched_path_reported(self):
        m = load_manifest_data({**MINIMAL, "rules": [{"pattern": "src/**", "visibility": "open"}]})
        report = validate_tree(m, SourceTree({"other/x.c": "x\n"}))
        assert [f.path for f in report.of_kind(FINDING_NO_RULE)] == ["other/x.c"]

    def test_unowned_file_reported(self, manifest):
        report = validate_tree(manifest, SourceTree({"soc/s1/init.c": "i\n"}))
        assert [f.path for f in report.of_kind(FINDING_NO_MODULE)] == ["soc/s1/init.c"]
