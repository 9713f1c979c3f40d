"""Deterministic repository and commit-stream generation.

One seeded RNG drives everything, so equal (seed, params) yield
byte-identical trees, manifests and commit streams.  Generated commit
streams replay cleanly through the dual-path sync: internal patches
apply to the evolving internal tree, community patches to the evolving
public subset, and community edits avoid stripped-region boundaries.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from . import dualsync
from .diffs import Patch, apply_patch, diff_trees
from .dualsync import strip_file
from .metrics import CommitRecord
from .model import Manifest, SourceTree, load_manifest_data

MARKER_BEGIN = "// INTERNAL-BEGIN"
MARKER_END = "// INTERNAL-END"


@dataclass(frozen=True)
class FixtureSpec:
    modules: int = 8
    features: int = 4
    tests: int = 16
    targets: int = 4
    socs: int = 2
    commits: int = 30
    commits_per_day: float = 15.0
    community_ratio: float = 0.02
    uniform_test_cost: float | None = None

    @classmethod
    def from_data(cls, data: dict) -> "FixtureSpec":
        return cls(**data)


#: Parameters behind the shipped acceptance numbers: 40 modules across
#: 4 targets, 20 features, 200 uniform-cost tests, 500 commits at the
#: observed 98/2 internal/community split.
ACCEPTANCE_SPEC = FixtureSpec(modules=40, features=20, tests=200, targets=4,
                              socs=4, commits=500, community_ratio=0.02,
                              uniform_test_cost=180.0)

_EPOCH = datetime(2025, 3, 3, 9, 0, 0, tzinfo=timezone.utc)


@dataclass(frozen=True)
class FixtureCommit:
    record: CommitRecord
    kind: str
    patch: Patch


def _module_id(k: int) -> str:
    return f"m{k:02d}"


def _gen_manifest(rng: random.Random, spec: FixtureSpec) -> Manifest:
    soc_ids = [f"s{i + 1}" for i in range(spec.socs)]
    feature_ids = [f"f{j:02d}" for j in range(spec.features)]
    rules = [{"pattern": f"soc/{sid}/**", "visibility": "open", "soc": [sid]}
             for sid in soc_ids]
    rules += [
        {"pattern": "**/secret.c", "visibility": "internal"},
        {"pattern": "**/impl.c", "visibility": "mixed"},
        {"pattern": "**", "visibility": "open"},
    ]
    modules = []
    for k in range(spec.modules):
        deps = []
        if k > 0:
            for _ in range(rng.randint(0, 2)):
                dep = _module_id(rng.randrange(k))
                if dep not in deps:
                    deps.append(dep)
        globs = [f"{_module_id(k)}/**"]
        if k == 0:
            globs.append("soc/**")
        modules.append({"id": _module_id(k), "globs": globs, "deps": sorted(deps),
                        "cost_sec": round(rng.uniform(60.0, 600.0), 1)})
    targets = []
    for t in range(spec.targets):
        members = sorted({_module_id(0)} |
                         {_module_id(k) for k in range(spec.modules) if k % spec.targets == t})
        targets.append({"id": f"bin{t}", "modules": members,
                        "link_cost_sec": round(rng.uniform(30.0, 120.0), 1)})
    features = []
    for j, fid in enumerate(feature_ids):
        owners = [f"{_module_id(k)}/**" for k in range(spec.modules) if k % spec.features == j]
        features.append({"id": fid, "globs": owners or [f"{_module_id(0)}/**"]})
    tests = []
    for i in range(spec.tests):
        cost = spec.uniform_test_cost if spec.uniform_test_cost is not None \
            else round(rng.uniform(30.0, 300.0), 1)
        tests.append({"id": f"t{i:03d}", "features": [feature_ids[i % spec.features]],
                      "cost_sec": cost})
    return load_manifest_data({
        "marker": {"begin": MARKER_BEGIN, "end": MARKER_END},
        "axes": {"os": ["linux", "windows"], "soc": soc_ids, "ip": ["vd", "ve"],
                 "feature": feature_ids, "usage": ["playback", "streaming"]},
        "rules": rules,
        "modules": modules,
        "targets": targets,
        "features": features,
        "tests": tests,
    })


def _gen_tree(rng: random.Random, spec: FixtureSpec) -> SourceTree:
    entries: dict[str, str] = {}
    for k in range(spec.modules):
        mod = _module_id(k)
        core = [f"int {mod}_fn{i}(void) {{ return {rng.randrange(1000)}; }}\n"
                for i in range(rng.randint(6, 12))]
        entries[f"{mod}/core.c"] = "".join(core)
        impl = [f"static int {mod}_tbl[{i}] = {{{rng.randrange(100)}}};\n"
                for i in range(rng.randint(3, 6))]
        impl.append(MARKER_BEGIN + "\n")
        impl += [f"/* prerelease {mod} step {i}: {rng.randrange(100)} */\n"
                 for i in range(rng.randint(1, 3))]
        impl.append(MARKER_END + "\n")
        impl += [f"int {mod}_commit(void) {{ return {rng.randrange(100)}; }}\n"
                 for _ in range(rng.randint(1, 3))]
        entries[f"{mod}/impl.c"] = "".join(impl)
        entries[f"{mod}/secret.c"] = (
            f"/* unpublished {mod} tuning */\n"
            f"int {mod}_secret = {rng.randrange(10000)};\n")
    for i in range(spec.socs):
        sid = f"s{i + 1}"
        entries[f"soc/{sid}/init.c"] = (
            f"/* {sid} bring-up */\n"
            f"int {sid}_init(void) {{ return {rng.randrange(100)}; }}\n")
    return SourceTree(entries)


def _region_spans(content: str) -> list[tuple[int, int]]:
    _, regions = strip_file(content, MARKER_BEGIN, MARKER_END)
    return [(r.begin_line, r.end_line) for r in regions]


def _internal_edit(rng: random.Random, tree: SourceTree, counter: int) -> SourceTree:
    """One random internal change: modify, insert, add a file, or open a
    new marked region.  Never produces unbalanced markers."""
    paths = tree.paths()
    roll = rng.random()
    if roll < 0.08:
        k = rng.choice([p.split("/")[0] for p in paths if "/" in p])
        new_path = f"{k}/extra_{counter}.c"
        if new_path not in tree:
            return tree.with_entries(
                {new_path: f"int extra_{counter}(void) {{ return {rng.randrange(100)}; }}\n"})
    if roll < 0.13:
        impls = [p for p in paths if p.endswith("/impl.c")]
        if impls:
            path = rng.choice(impls)
            lines = tree[path].splitlines(keepends=True)
            spans = _region_spans(tree[path])
            blocked = {g for b, e in spans for g in range(b, e)}
            gaps = [g for g in range(len(lines) + 1) if g not in blocked]
            gap = rng.choice(gaps)
            block = [MARKER_BEGIN + "\n",
                     f"/* staged change {counter}: {rng.randrange(100)} */\n",
                     MARKER_END + "\n"]
            return tree.with_entries({path: "".join(lines[:gap] + block + lines[gap:])})
    path = rng.choice(paths)
    lines = tree[path].splitlines(keepends=True)
    if roll < 0.4 or not lines:
        gap = rng.randint(0, len(lines))
        new_line = f"/* note {counter}: {rng.randrange(1000)} */\n"
        return tree.with_entries({path: "".join(lines[:gap] + [new_line] + lines[gap:])})
    editable = [i for i, ln in enumerate(lines)
                if MARKER_BEGIN not in ln and MARKER_END not in ln]
    if not editable:
        return tree
    idx = rng.choice(editable)
    lines[idx] = f"/* rev {counter}: {rng.randrange(1000)} */\n"
    return tree.with_entries({path: "".join(lines)})


def _community_edit(rng: random.Random, open_tree: SourceTree,
                    strip_map: dualsync.StripMap, counter: int) -> SourceTree | None:
    """One conflict-free community change on the public subset."""
    paths = open_tree.paths()
    for _ in range(20):
        path = rng.choice(paths)
        lines = open_tree[path].splitlines(keepends=True)
        info = strip_map.get(path)
        anchors = set(info.region_anchors()) if info is not None else set()
        if rng.random() < 0.5 and lines:
            # single-line replacements are anchored by the replaced line
            o = rng.randint(1, len(lines))
            lines[o - 1] = f"/* community fix {counter}: {rng.randrange(1000)} */\n"
            return open_tree.with_entries({path: "".join(lines)})
        safe_gaps = [g for g in range(len(lines) + 1) if g not in anchors]
        if not safe_gaps:
            continue
        gap = rng.choice(safe_gaps)
        new_line = f"/* community note {counter}: {rng.randrange(1000)} */\n"
        return open_tree.with_entries({path: "".join(lines[:gap] + [new_line] + lines[gap:])})
    return None


def gen_fixture(seed: int, spec: FixtureSpec | None = None
                ) -> tuple[SourceTree, Manifest, list[FixtureCommit]]:
    """Deterministic repo plus a replayable dual-path commit stream."""
    spec = spec or FixtureSpec()
    rng = random.Random(seed)
    manifest = _gen_manifest(rng, spec)
    tree = _gen_tree(rng, spec)

    commits: list[FixtureCommit] = []
    internal = tree
    maintained, strip_map = dualsync.derive_open_subset(internal, manifest)
    for i in range(spec.commits):
        kind = "open" if rng.random() < spec.community_ratio else "internal"
        if kind == "open":
            edited = _community_edit(rng, maintained, strip_map, i)
            if edited is None:
                kind = "internal"
            else:
                patch = diff_trees(maintained, edited)
                ported = dualsync.port_back(patch, internal, manifest)
                internal = apply_patch(internal, ported)
                maintained = apply_patch(maintained, patch)
        if kind == "internal":
            edited = _internal_edit(rng, internal, i)
            patch = diff_trees(internal, edited)
            translated = dualsync.forward_patch(patch, internal, manifest)
            internal = edited
            maintained = apply_patch(maintained, translated)
        strip_map = dualsync.derive_open_subset(internal, manifest)[1]

        offset_days = (i + rng.uniform(0.0, 0.9)) / spec.commits_per_day
        ts = _EPOCH + timedelta(seconds=round(offset_days * 86400))
        merged = ts + timedelta(seconds=round(rng.uniform(0.2, 4.0) * 86400)) \
            if rng.random() < 0.9 else None
        record = CommitRecord(
            id=f"c{i:04d}", timestamp=ts, path_kind=kind,
            files=tuple(sorted(patch.touched_paths())), merged_at=merged)
        commits.append(FixtureCommit(record, kind, patch))
    return tree, manifest, commits
