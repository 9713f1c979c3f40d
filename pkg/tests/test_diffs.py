import random
import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcc.diffs import Patch, apply_patch, diff_trees, format_patch, parse_patch
from dcc.errors import ApplyError, ParseError
from dcc.model import SourceTree


def test_empty_patch_roundtrip():
    assert format_patch(Patch()) == ""
    assert parse_patch("") == Patch()


def test_diff_apply_modify():
    old = SourceTree({"f.c": "a\nb\nc\n"})
    new = SourceTree({"f.c": "a\nB\nc\n"})
    patch = diff_trees(old, new)
    assert apply_patch(old, patch) == new
    text = format_patch(patch)
    assert "--- a/f.c" in text and "+++ b/f.c" in text
    assert parse_patch(text) == patch


def test_diff_create_and_delete():
    old = SourceTree({"keep.c": "k\n", "gone.c": "g1\ng2\n"})
    new = SourceTree({"keep.c": "k\n", "new.c": "n\n"})
    patch = diff_trees(old, new)
    text = format_patch(patch)
    assert "--- /dev/null\n+++ b/new.c" in text
    assert "--- a/gone.c\n+++ /dev/null" in text
    assert apply_patch(old, patch) == new


def test_create_empty_file():
    old = SourceTree({})
    new = SourceTree({"empty.c": ""})
    patch = diff_trees(old, new)
    assert apply_patch(old, parse_patch(format_patch(patch))) == new


def test_insert_at_top_of_file():
    old = SourceTree({"f.c": "b\nc\n"})
    new = SourceTree({"f.c": "a\nb\nc\n"})
    assert apply_patch(old, diff_trees(old, new)) == new


def test_zero_context_diff_applies():
    old = SourceTree({"f.c": "".join(f"l{i}\n" for i in range(20))})
    new = SourceTree({"f.c": "".join("l5!\n" if i == 5 else f"l{i}\n" for i in range(20))})
    patch = diff_trees(old, new, context=0)
    assert apply_patch(old, patch) == new


def test_context_mismatch_raises():
    old = SourceTree({"f.c": "a\nb\nc\n"})
    new = SourceTree({"f.c": "a\nB\nc\n"})
    patch = diff_trees(old, new)
    with pytest.raises(ApplyError):
        apply_patch(SourceTree({"f.c": "a\nx\nc\n"}), patch)


def test_apply_to_missing_file_raises():
    old = SourceTree({"f.c": "a\n"})
    patch = diff_trees(old, SourceTree({"f.c": "b\n"}))
    with pytest.raises(ApplyError):
        apply_patch(SourceTree({}), patch)


def test_create_existing_file_raises():
    patch = diff_trees(SourceTree({}), SourceTree({"f.c": "x\n"}))
    with pytest.raises(ApplyError):
        apply_patch(SourceTree({"f.c": "x\n"}), patch)


def test_parse_omitted_length_defaults_to_one():
    text = "--- a/f.c\n+++ b/f.c\n@@ -1 +1 @@\n-a\n+b\n"
    patch = parse_patch(text)
    hunk = patch.files[0].hunks[0]
    assert (hunk.old_len, hunk.new_len) == (1, 1)
    assert apply_patch(SourceTree({"f.c": "a\n"}), patch) == SourceTree({"f.c": "b\n"})


def test_parse_rejects_bad_counts():
    with pytest.raises(ParseError):
        parse_patch("--- a/f.c\n+++ b/f.c\n@@ -1,2 +1,1 @@\n-a\n+b\n")


def test_parse_rejects_garbage():
    with pytest.raises(ParseError):
        parse_patch("this is not a diff\n")


def test_parse_rejects_overlapping_hunks():
    text = ("--- a/f.c\n+++ b/f.c\n"
            "@@ -1,2 +1,2 @@\n-a\n+A\n b\n"
            "@@ -2,1 +2,1 @@\n-b\n+B\n")
    with pytest.raises(ParseError):
        parse_patch(text)


def _random_content(rng, lines=8, alphabet="abc"):
    return "".join(rng.choice(alphabet) * rng.randint(1, 3) + "\n"
                   for _ in range(rng.randint(0, lines)))


def test_diff_apply_fuzz():
    rng = random.Random(7)
    names = ["a.c", "b/x.c", "b/y.c", "c.h"]
    for _ in range(300):
        old = SourceTree({n: _random_content(rng) for n in names if rng.random() < 0.8})
        new = SourceTree({n: _random_content(rng) for n in names if rng.random() < 0.8})
        patch = diff_trees(old, new)
        assert apply_patch(old, patch) == new
        # formatted text parses back to the same patch
        assert parse_patch(format_patch(patch)) == patch


@settings(max_examples=200, deadline=None)
@given(
    old=st.lists(st.text(alphabet=string.ascii_lowercase, min_size=0, max_size=5), max_size=12),
    new=st.lists(st.text(alphabet=string.ascii_lowercase, min_size=0, max_size=5), max_size=12),
)
def test_single_file_diff_apply_property(old, new):
    old_tree = SourceTree({"f.c": "".join(line + "\n" for line in old)})
    new_tree = SourceTree({"f.c": "".join(line + "\n" for line in new)})
    patch = diff_trees(old_tree, new_tree)
    assert apply_patch(old_tree, patch) == new_tree
