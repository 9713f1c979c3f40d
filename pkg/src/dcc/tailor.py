"""Release tailoring and new-SOC scaffolding.

Tailoring filters a tree down to the files compatible with a release
configuration.  Untagged axes are universal: common code carries no
soc/usage tags and survives every tailoring.  Scaffolding a SOC touches
a fixed, file-isolated set of paths so enabling a product never fans
out across the tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .diffs import Patch, diff_trees
from .dualsync import strip_file
from .errors import ConfigError, DuplicateSocError, UnknownFamilyError
from .model import AXIS_NAMES, Manifest, SourceTree, normalize_text, tags_of
from .smartval import TraceGraph


@dataclass(frozen=True)
class ReleaseConfig:
    """Axis subsets selecting a release; an empty subset means "all"."""

    os: frozenset[str] = frozenset()
    socs: frozenset[str] = frozenset()
    ips: frozenset[str] = frozenset()
    features: frozenset[str] = frozenset()
    usages: frozenset[str] = frozenset()
    include_internal: bool = False

    _FIELD_BY_AXIS = {"os": "os", "soc": "socs", "ip": "ips",
                      "feature": "features", "usage": "usages"}

    def axis(self, name: str) -> frozenset[str]:
        return getattr(self, self._FIELD_BY_AXIS[name])

    @classmethod
    def from_data(cls, data: dict) -> "ReleaseConfig":
        allowed = {"os", "socs", "ips", "features", "usages", "include_internal"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        return cls(
            os=frozenset(data.get("os", [])),
            socs=frozenset(data.get("socs", [])),
            ips=frozenset(data.get("ips", [])),
            features=frozenset(data.get("features", [])),
            usages=frozenset(data.get("usages", [])),
            include_internal=bool(data.get("include_internal", False)),
        )

    def validate(self, manifest: Manifest) -> None:
        for ax in AXIS_NAMES:
            unknown = self.axis(ax) - manifest.axes[ax]
            if unknown:
                raise ConfigError(f"unknown {ax} id(s) {sorted(unknown)}")


def tailor_tree(tree: SourceTree, manifest: Manifest, config: ReleaseConfig) -> SourceTree:
    """Keep exactly the files compatible with the config on every axis.

    Internal files are dropped and mixed files stripped unless
    include_internal is set.
    """
    config.validate(manifest)
    out: dict[str, str] = {}
    for path, content in tree.items():
        tags = tags_of(manifest, path)
        compatible = True
        for ax in AXIS_NAMES:
            file_tags = tags.axis(ax)
            wanted = config.axis(ax)
            if file_tags and wanted and not (file_tags & wanted):
                compatible = False
                break
        if not compatible:
            continue
        if tags.visibility == "internal" and not config.include_internal:
            continue
        if tags.visibility == "mixed" and not config.include_internal:
            content, _ = strip_file(content, manifest.marker_begin, manifest.marker_end, path)
        out[path] = content
    return SourceTree(out)


_INIT_TEMPLATE = """\
/* {soc}: platform bring-up, derived from the {family} family defaults. */
#include "soc_common.h"

int {soc}_init(struct soc_context *ctx) {{
    soc_apply_family_defaults(ctx, "{family}");
    return soc_register(ctx, "{soc}");
}}
"""

_CAPS_TEMPLATE = """\
/* {soc}: capability table. Entries override the {family} family baseline. */
#include "soc_caps.h"

const struct soc_caps {soc}_caps = {{
    .family = "{family}",
    .inherit_baseline = 1,
}};
"""

_REGS_TEMPLATE = """\
/* {soc}: register overrides applied after {family} family programming. */
#include "soc_regs.h"

const struct reg_override {soc}_reg_overrides[] = {{
    /* no deviations from {family} yet */
}};
"""


@dataclass(frozen=True)
class ScaffoldPlan:
    soc_id: str
    family: str
    creates: tuple[tuple[str, str], ...]
    edits: tuple[tuple[str, Patch], ...]

    @property
    def impact_count(self) -> int:
        return len(self.creates) + len({path for path, _ in self.edits})

    def touched_paths(self) -> list[str]:
        return sorted({p for p, _ in self.creates} | {p for p, _ in self.edits})

    def is_empty(self) -> bool:
        return not self.creates and not self.edits


def scaffold_soc(manifest: Manifest, soc_id: str, family: str,
                 manifest_text: str | None = None) -> ScaffoldPlan:
    """Plan support for a new SOC: three files under soc/<id>/ plus one
    manifest edit registering the id and its isolation rule.

    The file set is fixed (init, capability table, register overrides)
    so the impact stays bounded regardless of tree size.
    """
    if soc_id in manifest.axes["soc"]:
        raise DuplicateSocError(f"soc id {soc_id!r} already declared")
    if family not in manifest.axes["soc"]:
        raise UnknownFamilyError(f"family {family!r} not in soc vocabulary")

    creates = tuple(
        (f"soc/{soc_id}/{name}", normalize_text(template.format(soc=soc_id, family=family)))
        for name, template in (
            ("init.c", _INIT_TEMPLATE),
            ("caps.c", _CAPS_TEMPLATE),
            ("regs.c", _REGS_TEMPLATE),
        )
    )

    base_text = manifest_text if manifest_text is not None else manifest.to_json()
    data = json.loads(base_text)
    data.setdefault("axes", {}).setdefault("soc", []).append(soc_id)
    family_rule = next(
        (r for r in manifest.rules if family in r.tags.soc), None)
    visibility = family_rule.tags.visibility if family_rule else "open"
    new_rule = {"pattern": f"soc/{soc_id}/**", "visibility": visibility, "soc": [soc_id]}
    data.setdefault("rules", []).insert(0, new_rule)
    edited_text = json.dumps(data, indent=2) + "\n"
    edit = diff_trees(SourceTree({"dcc.json": normalize_text(base_text)}),
                      SourceTree({"dcc.json": edited_text}))
    return ScaffoldPlan(soc_id, family, creates, (("dcc.json", edit),))


@dataclass(frozen=True)
class ImpactReport:
    impacted_features: frozenset[str]
    impacted_tests: frozenset[str]
    cross_soc_overlap: frozenset[str]

    def to_data(self) -> dict:
        return {"impacted_features": sorted(self.impacted_features),
                "impacted_tests": sorted(self.impacted_tests),
                "cross_soc_overlap": sorted(self.cross_soc_overlap)}


def impact_report(plan: ScaffoldPlan, graph: TraceGraph, manifest: Manifest) -> ImpactReport:
    """Features and tests reachable from the plan's touched paths, and
    their overlap with features serving any other SOC.

    Untagged files serve every SOC, so touching shared code shows up as
    cross-SOC overlap; a compliant scaffold reports none.
    """
    if plan.is_empty():
        return ImpactReport(frozenset(), frozenset(), frozenset())
    impacted: set[str] = set()
    for path in plan.touched_paths():
        impacted |= graph.features_of(path)
    tests: set[str] = set()
    for fid in impacted:
        tests |= graph.feature_to_tests.get(fid, frozenset())

    other_soc_features: set[str] = set()
    for path, features in graph.file_to_features.items():
        socs = tags_of(manifest, path).soc
        if not socs or (socs - {plan.soc_id}):
            other_soc_features |= features
    return ImpactReport(frozenset(impacted), frozenset(tests),
                        frozenset(impacted & other_soc_features))
