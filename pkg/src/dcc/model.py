"""Manifest schema, tag resolution and the in-memory source tree.

The manifest is a single JSON document kept at the tree root under the
fixed name ``dcc.json``.  It declares the marker strings, the tag axis
vocabularies, the ordered path rules, and the module/target/feature/test
tables every other module operates on.

Files that match no path rule default to ``internal`` visibility with
empty axis tags, so unclassified code can never reach a derived or
tailored output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .errors import CycleError, DanglingReferenceError, ParseError, SchemaError
from .globs import glob_match

MANIFEST_NAME = "dcc.json"

VISIBILITIES = ("open", "internal", "mixed")
AXIS_NAMES = ("os", "soc", "ip", "feature", "usage")


@dataclass(frozen=True)
class TagAxes:
    """Visibility plus the orthogonal decoupling-dimension tags of a file."""

    visibility: str = "internal"
    os: frozenset[str] = frozenset()
    soc: frozenset[str] = frozenset()
    ip: frozenset[str] = frozenset()
    feature: frozenset[str] = frozenset()
    usage: frozenset[str] = frozenset()

    def axis(self, name: str) -> frozenset[str]:
        return getattr(self, name)


#: Fail-closed default for paths matched by no rule.
INTERNAL_DEFAULT = TagAxes(visibility="internal")


@dataclass(frozen=True)
class PathRule:
    pattern: str
    tags: TagAxes
    priority: int


@dataclass(frozen=True)
class ModuleDef:
    id: str
    globs: tuple[str, ...]
    deps: tuple[str, ...]
    cost_sec: float


@dataclass(frozen=True)
class TargetDef:
    id: str
    modules: tuple[str, ...]
    link_cost_sec: float


@dataclass(frozen=True)
class FeatureDef:
    id: str
    globs: tuple[str, ...]


@dataclass(frozen=True)
class TestDef:
    id: str
    features: tuple[str, ...]
    cost_sec: float


@dataclass(frozen=True)
class Manifest:
    marker_begin: str
    marker_end: str
    axes: Mapping[str, frozenset[str]]
    rules: tuple[PathRule, ...]
    modules: tuple[ModuleDef, ...]
    targets: tuple[TargetDef, ...]
    features: tuple[FeatureDef, ...]
    tests: tuple[TestDef, ...]

    def module_ids(self) -> list[str]:
        return [m.id for m in self.modules]

    def to_data(self) -> dict:
        """Canonical JSON-compatible dict, inverse of ``load_manifest_data``."""
        rules = []
        for r in self.rules:
            entry: dict = {"pattern": r.pattern, "visibility": r.tags.visibility}
            for ax in AXIS_NAMES:
                vals = r.tags.axis(ax)
                if vals:
                    entry[ax] = sorted(vals)
            rules.append(entry)
        return {
            "marker": {"begin": self.marker_begin, "end": self.marker_end},
            "axes": {ax: sorted(self.axes[ax]) for ax in AXIS_NAMES},
            "rules": rules,
            "modules": [
                {"id": m.id, "globs": list(m.globs), "deps": list(m.deps), "cost_sec": m.cost_sec}
                for m in self.modules
            ],
            "targets": [
                {"id": t.id, "modules": list(t.modules), "link_cost_sec": t.link_cost_sec}
                for t in self.targets
            ],
            "features": [{"id": f.id, "globs": list(f.globs)} for f in self.features],
            "tests": [{"id": t.id, "features": list(t.features), "cost_sec": t.cost_sec} for t in self.tests],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_data(), indent=2) + "\n"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _check_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    _require(not unknown, f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    _require(not missing, f"{where}: missing required key(s) {sorted(missing)}")


def _str_list(value, where: str) -> tuple[str, ...]:
    _require(isinstance(value, list) and all(isinstance(v, str) for v in value),
             f"{where}: expected an array of strings")
    return tuple(value)


def _nonneg(value, where: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool) and value >= 0,
             f"{where}: expected a nonnegative number")
    return float(value)


def load_manifest(text: str) -> Manifest:
    """Parse and validate a manifest document.

    Raises ParseError for malformed JSON, SchemaError for unknown or
    missing keys (strict mode), DanglingReferenceError for unresolved
    ids, CycleError for module dependency cycles.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"manifest is not valid JSON: {e}") from e
    return load_manifest_data(data)


def load_manifest_data(data) -> Manifest:
    _require(isinstance(data, dict), "manifest: top level must be an object")
    _check_keys(data, {"marker", "axes", "rules", "modules", "targets", "features", "tests"},
                {"marker", "rules"}, "manifest")

    marker = data["marker"]
    _require(isinstance(marker, dict), "marker: expected an object")
    _check_keys(marker, {"begin", "end"}, {"begin", "end"}, "marker")
    begin, end = marker["begin"], marker["end"]
    _require(isinstance(begin, str) and isinstance(end, str) and begin and end,
             "marker: begin and end must be non-empty strings")
    _require(begin not in end and end not in begin,
             "marker: begin and end must not contain each other")

    axes: dict[str, frozenset[str]] = {}
    raw_axes = data.get("axes", {})
    _require(isinstance(raw_axes, dict), "axes: expected an object")
    _check_keys(raw_axes, set(AXIS_NAMES), set(), "axes")
    for ax in AXIS_NAMES:
        axes[ax] = frozenset(_str_list(raw_axes.get(ax, []), f"axes.{ax}"))

    rules = []
    _require(isinstance(data["rules"], list), "rules: expected an array")
    for i, raw in enumerate(data["rules"]):
        where = f"rules[{i}]"
        _require(isinstance(raw, dict), f"{where}: expected an object")
        _check_keys(raw, {"pattern", "visibility", *AXIS_NAMES}, {"pattern", "visibility"}, where)
        _require(isinstance(raw["pattern"], str) and raw["pattern"], f"{where}: pattern must be a non-empty string")
        _require(raw["visibility"] in VISIBILITIES,
                 f"{where}: visibility must be one of {VISIBILITIES}")
        tag_sets = {}
        for ax in AXIS_NAMES:
            ids = frozenset(_str_list(raw.get(ax, []), f"{where}.{ax}"))
            undeclared = ids - axes[ax]
            if undeclared:
                raise DanglingReferenceError(f"{where}: undeclared {ax} id(s) {sorted(undeclared)}")
            tag_sets[ax] = ids
        rules.append(PathRule(raw["pattern"], TagAxes(raw["visibility"], **tag_sets), i))

    modules = []
    for i, raw in enumerate(data.get("modules", [])):
        where = f"modules[{i}]"
        _require(isinstance(raw, dict), f"{where}: expected an object")
        _check_keys(raw, {"id", "globs", "deps", "cost_sec"}, {"id", "globs", "cost_sec"}, where)
        modules.append(ModuleDef(raw["id"], _str_list(raw["globs"], f"{where}.globs"),
                                 _str_list(raw.get("deps", []), f"{where}.deps"),
                                 _nonneg(raw["cost_sec"], f"{where}.cost_sec")))

    targets = []
    for i, raw in enumerate(data.get("targets", [])):
        where = f"targets[{i}]"
        _require(isinstance(raw, dict), f"{where}: expected an object")
        _check_keys(raw, {"id", "modules", "link_cost_sec"}, {"id", "modules", "link_cost_sec"}, where)
        targets.append(TargetDef(raw["id"], _str_list(raw["modules"], f"{where}.modules"),
                                 _nonneg(raw["link_cost_sec"], f"{where}.link_cost_sec")))

    features = []
    for i, raw in enumerate(data.get("features", [])):
        where = f"features[{i}]"
        _require(isinstance(raw, dict), f"{where}: expected an object")
        _check_keys(raw, {"id", "globs"}, {"id", "globs"}, where)
        globs = _str_list(raw["globs"], f"{where}.globs")
        _require(len(globs) >= 1, f"{where}: at least one glob required")
        features.append(FeatureDef(raw["id"], globs))

    tests = []
    for i, raw in enumerate(data.get("tests", [])):
        where = f"tests[{i}]"
        _require(isinstance(raw, dict), f"{where}: expected an object")
        _check_keys(raw, {"id", "features", "cost_sec"}, {"id", "features", "cost_sec"}, where)
        feats = _str_list(raw["features"], f"{where}.features")
        _require(len(feats) >= 1, f"{where}: features must be non-empty")
        tests.append(TestDef(raw["id"], feats, _nonneg(raw["cost_sec"], f"{where}.cost_sec")))

    manifest = Manifest(begin, end, axes, tuple(rules), tuple(modules),
                        tuple(targets), tuple(features), tuple(tests))
    _validate_references(manifest)
    return manifest


def _validate_references(m: Manifest) -> None:
    for name, ids in (("module", [x.id for x in m.modules]),
                      ("target", [x.id for x in m.targets]),
                      ("feature", [x.id for x in m.features]),
                      ("test", [x.id for x in m.tests])):
        seen = set()
        for i in ids:
            _require(i not in seen, f"duplicate {name} id {i!r}")
            seen.add(i)

    module_ids = set(m.module_ids())
    for mod in m.modules:
        for dep in mod.deps:
            if dep not in module_ids:
                raise DanglingReferenceError(f"module {mod.id!r} depends on undeclared module {dep!r}")
    for tgt in m.targets:
        for mod in tgt.modules:
            if mod not in module_ids:
                raise DanglingReferenceError(f"target {tgt.id!r} references undeclared module {mod!r}")
    feature_ids = {f.id for f in m.features}
    for test in m.tests:
        for feat in test.features:
            if feat not in feature_ids:
                raise DanglingReferenceError(f"test {test.id!r} references undeclared feature {feat!r}")

    # Kahn's algorithm over module deps; leftovers are on a cycle.
    indeg = {i: 0 for i in module_ids}
    dependents: dict[str, list[str]] = {i: [] for i in module_ids}
    for mod in m.modules:
        for dep in mod.deps:
            indeg[mod.id] += 1
            dependents[dep].append(mod.id)
    queue = [i for i in sorted(module_ids) if indeg[i] == 0]
    done = 0
    while queue:
        cur = queue.pop()
        done += 1
        for nxt in dependents[cur]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                queue.append(nxt)
    if done != len(module_ids):
        cyclic = sorted(i for i in module_ids if indeg[i] > 0)
        raise CycleError(f"module dependency cycle involving {cyclic}")


def tags_of(manifest: Manifest, path: str) -> TagAxes:
    """Resolve a path to its tags; first matching rule wins, fail-closed."""
    for rule in manifest.rules:
        if glob_match(rule.pattern, path):
            return rule.tags
    return INTERNAL_DEFAULT


def module_owner(manifest: Manifest, path: str) -> str | None:
    """First-declared module whose globs match the path, or None."""
    for mod in manifest.modules:
        if any(glob_match(g, path) for g in mod.globs):
            return mod.id
    return None


def _check_path(path: str) -> str:
    if not isinstance(path, str) or not path:
        raise ParseError(f"invalid tree path {path!r}")
    if path.startswith("/") or "\\" in path:
        raise ParseError(f"tree path must be relative and '/'-separated: {path!r}")
    for seg in path.split("/"):
        if seg in ("", ".", ".."):
            raise ParseError(f"tree path contains forbidden segment: {path!r}")
    return path


def normalize_text(content: str) -> str:
    """Normalize line endings to \\n and ensure a trailing newline."""
    content = content.replace("\r\n", "\n").replace("\r", "\n")
    if content and not content.endswith("\n"):
        content += "\n"
    return content


class SourceTree:
    """Ordered mapping from relative file paths to normalized text.

    Iteration order is lexicographic by path.  Instances are treated as
    immutable; mutating operations return new trees.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, str] | None = None):
        normalized: dict[str, str] = {}
        for path, content in (entries or {}).items():
            _check_path(path)
            if not isinstance(content, str):
                raise ParseError(f"{path}: tree content must be text")
            if "\x00" in content:
                raise ParseError(f"{path}: binary content rejected")
            normalized[path] = normalize_text(content)
        self._entries = dict(sorted(normalized.items()))

    @classmethod
    def from_dir(cls, root: str) -> "SourceTree":
        """Load a tree from a directory, skipping hidden directories and
        the manifest document itself."""
        entries: dict[str, str] = {}
        for dirpath, dirnames, filenames in os.walk(root):
            dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
            for name in sorted(filenames):
                full = os.path.join(dirpath, name)
                rel = os.path.relpath(full, root).replace(os.sep, "/")
                if rel == MANIFEST_NAME:
                    continue
                try:
                    with open(full, encoding="utf-8") as fh:
                        entries[rel] = fh.read()
                except UnicodeDecodeError as e:
                    raise ParseError(f"{rel}: binary content rejected") from e
        return cls(entries)

    def write_dir(self, root: str) -> None:
        os.makedirs(root, exist_ok=True)
        for path, content in self.items():
            full = os.path.join(root, *path.split("/"))
            os.makedirs(os.path.dirname(full), exist_ok=True)
            with open(full, "w", encoding="utf-8") as fh:
                fh.write(content)

    def paths(self) -> list[str]:
        return list(self._entries)

    def items(self) -> Iterator[tuple[str, str]]:
        return iter(self._entries.items())

    def get(self, path: str, default: str | None = None) -> str | None:
        return self._entries.get(path, default)

    def with_entries(self, updates: Mapping[str, str | None]) -> "SourceTree":
        """New tree with paths replaced (value None removes the path)."""
        merged = dict(self._entries)
        for path, content in updates.items():
            if content is None:
                merged.pop(path, None)
            else:
                merged[path] = content
        return SourceTree(merged)

    def to_data(self) -> dict[str, str]:
        return dict(self._entries)

    def __getitem__(self, path: str) -> str:
        return self._entries[path]

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SourceTree) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"SourceTree({len(self._entries)} files)"


@dataclass(frozen=True)
class Finding:
    path: str
    kind: str
    detail: str = ""


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.findings

    def of_kind(self, kind: str) -> list[Finding]:
        return [f for f in self.findings if f.kind == kind]


FINDING_NO_RULE = "NoRuleMatch"
FINDING_UNBALANCED = "UnbalancedMarker"
FINDING_NESTED = "NestedMarker"
FINDING_MARKER_IN_OPEN = "MarkerInOpenFile"
FINDING_NO_MODULE = "NoModuleOwner"


def validate_tree(manifest: Manifest, tree: SourceTree) -> ValidationReport:
    """Lint a tree against the manifest.

    Findings are report entries, never failures: unmatched paths,
    marker imbalance or nesting, markers in open-visibility files, and
    files owned by no module.
    """
    report = ValidationReport()
    for path, content in tree.items():
        matched = any(glob_match(r.pattern, path) for r in manifest.rules)
        if not matched:
            report.findings.append(Finding(path, FINDING_NO_RULE))
        tags = tags_of(manifest, path)
        has_marker = manifest.marker_begin in content or manifest.marker_end in content
        if has_marker:
            if tags.visibility == "open":
                report.findings.append(Finding(path, FINDING_MARKER_IN_OPEN))
            kind = _marker_balance(content, manifest.marker_begin, manifest.marker_end)
            if kind:
                report.findings.append(Finding(path, kind))
        if module_owner(manifest, path) is None:
            report.findings.append(Finding(path, FINDING_NO_MODULE))
    return report


def _marker_balance(content: str, begin: str, end: str) -> str | None:
    open_region = False
    for line in content.splitlines():
        if begin in line:
            if open_region:
                return FINDING_NESTED
            open_region = True
        elif end in line:
            if not open_region:
                return FINDING_UNBALANCED
            open_region = False
    return FINDING_UNBALANCED if open_region else None
