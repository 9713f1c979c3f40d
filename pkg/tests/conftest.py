import json

import pytest

from dcc.model import SourceTree, load_manifest_data

BEGIN = "// INTERNAL-BEGIN"
END = "// INTERNAL-END"


def manifest_data(**overrides):
    """Baseline three-visibility manifest used across suites."""
    data = {
        "marker": {"begin": BEGIN, "end": END},
        "axes": {"soc": ["s1", "s2"], "feature": ["fA", "fB"]},
        "rules": [
            {"pattern": "soc/s1/**", "visibility": "open", "soc": ["s1"]},
            {"pattern": "soc/s2/**", "visibility": "open", "soc": ["s2"]},
            {"pattern": "internal/**", "visibility": "internal"},
            {"pattern": "**/impl.c", "visibility": "mixed"},
            {"pattern": "**", "visibility": "open"},
        ],
        "modules": [
            {"id": "m1", "globs": ["a/**"], "cost_sec": 10},
            {"id": "m2", "globs": ["b/**"], "deps": ["m1"], "cost_sec": 5},
        ],
        "targets": [{"id": "T", "modules": ["m1", "m2"], "link_cost_sec": 1}],
        "features": [
            {"id": "fA", "globs": ["a/**"]},
            {"id": "fB", "globs": ["b/**"]},
        ],
        "tests": [
            {"id": "t1", "features": ["fA"], "cost_sec": 10},
            {"id": "t2", "features": ["fA"], "cost_sec": 20},
            {"id": "t3", "features": ["fB"], "cost_sec": 10},
        ],
    }
    data.update(overrides)
    return data


@pytest.fixture
def manifest():
    return load_manifest_data(manifest_data())


@pytest.fixture
def tree():
    return SourceTree({
        "a/core.c": "a1\na2\na3\n",
        "a/impl.c": "x1\n" + BEGIN + "\nsecret\n" + END + "\nx2\n",
        "b/util.c": "b1\nb2\n",
        "internal/keys.c": "k1\n",
        "soc/s1/init.c": "s1 init\n",
        "soc/s2/init.c": "s2 init\n",
    })


@pytest.fixture
def manifest_text():
    return json.dumps(manifest_data(), indent=2) + "\n"
