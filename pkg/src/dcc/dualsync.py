"""Dual-path development over a single code base.

The authoritative internal tree carries marked regions fencing off
non-publishable lines.  The public subset is derived by dropping
internal-visibility files and stripping marked regions from mixed
files.  Internal commits are translated into public patches by
derive-then-diff; community patches are ported back by splicing the
edited public lines around the preserved regions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diffs import FilePatch, Patch, apply_patch, diff_trees
from .errors import (
    ApplyError,
    ConflictError,
    MarkerError,
    NestedMarkerError,
    ParseError,
    UnbalancedMarkerError,
)
from .model import Manifest, SourceTree, tags_of


@dataclass(frozen=True)
class MarkedRegion:
    """One stripped region; line numbers are 1-based and include the
    marker lines themselves."""

    path: str
    begin_line: int
    end_line: int


@dataclass(frozen=True)
class FileStripInfo:
    """Removed regions of one file plus the surviving-line mapping."""

    path: str
    regions: tuple[MarkedRegion, ...]
    #: 1-based internal line numbers that survive stripping, in order.
    survivors: tuple[int, ...]

    def internal_to_open(self, line: int) -> int | None:
        """Map an internal line number to its public line number, or
        None when the line was stripped.  Strictly increasing on its
        domain."""
        for region in self.regions:
            if region.begin_line <= line <= region.end_line:
                return None
        removed_before = sum(
            r.end_line - r.begin_line + 1 for r in self.regions if r.end_line < line)
        return line - removed_before

    def open_to_internal(self, line: int) -> int:
        return self.survivors[line - 1]

    def region_anchors(self) -> list[int]:
        """For each region, the number of surviving lines before it:
        the gap in the public file where the region invisibly sits."""
        anchors = []
        for region in self.regions:
            anchors.append(sum(1 for s in self.survivors if s < region.begin_line))
        return anchors


class StripMap(dict):
    """path -> FileStripInfo for every mixed file of one derivation."""


def strip_file(content: str, marker_begin: str, marker_end: str,
               path: str = "") -> tuple[str, list[MarkedRegion]]:
    """Remove every marker line and every line between paired markers.

    A line is a marker line iff it contains the marker string, so the
    grammar is comment-style agnostic.  Nested or unbalanced markers
    are author errors and raise.
    """
    kept: list[str] = []
    regions: list[MarkedRegion] = []
    open_at: int | None = None
    lines = content.splitlines(keepends=True)
    for idx, line in enumerate(lines, start=1):
        if marker_begin in line:
            if open_at is not None:
                raise NestedMarkerError(f"{path or '<text>'}:{idx}: begin marker inside open region")
            open_at = idx
        elif marker_end in line:
            if open_at is None:
                raise UnbalancedMarkerError(f"{path or '<text>'}:{idx}: end marker without begin")
            regions.append(MarkedRegion(path, open_at, idx))
            open_at = None
        elif open_at is None:
            kept.append(line)
    if open_at is not None:
        raise UnbalancedMarkerError(f"{path or '<text>'}:{open_at}: begin marker never closed")
    return "".join(kept), regions


def derive_open_subset(tree: SourceTree, manifest: Manifest) -> tuple[SourceTree, StripMap]:
    """Derive the publishable subset: open files verbatim, mixed files
    stripped, internal files absent.

    Marker strings inside an open-visibility file raise rather than
    leak; the fail-closed stance is the whole point of the model.
    """
    out: dict[str, str] = {}
    strip_map = StripMap()
    for path, content in tree.items():
        visibility = tags_of(manifest, path).visibility
        if visibility == "internal":
            continue
        if visibility == "open":
            if manifest.marker_begin in content or manifest.marker_end in content:
                raise MarkerError(
                    f"{path}: marker string in open-visibility file; "
                    "reclassify the rule as mixed or drop the marker")
            out[path] = content
            continue
        stripped, regions = strip_file(content, manifest.marker_begin, manifest.marker_end, path)
        out[path] = stripped
        removed = set()
        for r in regions:
            removed.update(range(r.begin_line, r.end_line + 1))
        total = content.count("\n")
        survivors = tuple(i for i in range(1, total + 1) if i not in removed)
        strip_map[path] = FileStripInfo(path, tuple(regions), survivors)
    return SourceTree(out), strip_map


def forward_patch(internal_patch: Patch, base: SourceTree, manifest: Manifest) -> Patch:
    """Translate an internal commit into the equivalent public patch.

    Computed as derive-then-diff, so the translation is correct against
    the commutativity contract by construction: applying the result to
    derive(base) equals derive(apply(base, patch)).
    """
    patched = apply_patch(base, internal_patch)
    open_before, _ = derive_open_subset(base, manifest)
    open_after, _ = derive_open_subset(patched, manifest)
    return diff_trees(open_before, open_after)


@dataclass
class _EditOp:
    """One contiguous change inside a hunk, in old-file line space."""

    del_start: int  # first deleted line (1-based); for pure inserts, 0
    del_end: int    # last deleted line; < del_start when nothing deleted
    insert_after: int  # gap index the insertions land in
    inserted: list[str]

    @property
    def is_insert_only(self) -> bool:
        return self.del_end < self.del_start

    def ambiguous_against(self, anchors: list[int]) -> bool:
        """True when the inserted text has no canonical position
        relative to an invisible region.

        A pure insertion at a region's gap could equally precede or
        follow the region.  A replacement is anchored by its deleted
        lines, so only a region strictly inside the deleted span (both
        neighbours gone) loses its position.
        """
        if not self.inserted:
            return False
        if self.is_insert_only:
            return self.insert_after in anchors
        return any(self.del_start <= a <= self.del_end - 1 for a in anchors)


def _edit_ops(fp: FilePatch) -> list[_EditOp]:
    ops: list[_EditOp] = []
    for h in fp.hunks:
        old_line = h.old_start if h.old_len else h.old_start + 1
        current: _EditOp | None = None
        for tag, text in h.lines:
            if tag == " ":
                current = None
                old_line += 1
            elif tag == "-":
                if current is None:
                    current = _EditOp(old_line, old_line - 1, old_line - 1, [])
                    ops.append(current)
                current.del_end = old_line
                old_line += 1
            else:  # '+'
                if current is None:
                    current = _EditOp(old_line, old_line - 1, old_line - 1, [])
                    ops.append(current)
                current.inserted.append(text)
    return ops


def _splice_internal(internal_content: str, info: FileStripInfo, fp: FilePatch) -> str:
    """Rebuild the internal file after a public-side edit.

    Surviving lines are rewritten per the patch; marked regions are
    re-emitted verbatim at their original gaps.  An edit that lands on
    a region's gap is ambiguous (the new text could equally precede or
    follow the invisible region) and raises ConflictError.
    """
    internal_lines = internal_content.splitlines(keepends=True)
    anchors = info.region_anchors()
    ops = _edit_ops(fp)

    deleted: set[int] = set()
    inserts_at: dict[int, list[str]] = {}
    for op in ops:
        if op.ambiguous_against(anchors):
            raise ConflictError(
                f"{info.path}: edit straddles a stripped-region boundary "
                "with no unambiguous placement; needs human review")
        if op.inserted:
            gap = op.insert_after if op.is_insert_only else op.del_start - 1
            inserts_at.setdefault(gap, []).extend(op.inserted)
        if not op.is_insert_only:
            deleted.update(range(op.del_start, op.del_end + 1))

    regions_at: dict[int, list[MarkedRegion]] = {}
    for anchor, region in zip(anchors, info.regions):
        regions_at.setdefault(anchor, []).append(region)

    out: list[str] = []
    n_open = len(info.survivors)
    for gap in range(n_open + 1):
        for region in regions_at.get(gap, []):
            out.extend(internal_lines[region.begin_line - 1:region.end_line])
        out.extend(inserts_at.get(gap, []))
        open_line = gap + 1
        if open_line <= n_open and open_line not in deleted:
            out.append(internal_lines[info.survivors[open_line - 1] - 1])
    return "".join(out)


def port_back(open_patch: Patch, base: SourceTree, manifest: Manifest) -> Patch:
    """Translate a community patch on the public subset into an
    internal patch satisfying the round-trip contract.

    Ports never touch lines inside marked regions; any edit whose
    placement relative to a region is ambiguous raises ConflictError
    and is left for human review.
    """
    open_base, strip_map = derive_open_subset(base, manifest)
    open_target = apply_patch(open_base, open_patch)  # ApplyError if stale

    for fp in open_patch.files:
        for h in fp.hunks:
            for tag, text in h.lines:
                if tag == "+" and (manifest.marker_begin in text or manifest.marker_end in text):
                    raise ConflictError(
                        f"{fp.new_path or fp.old_path}: community patch introduces a marker string")

    updates: dict[str, str | None] = {}
    for fp in open_patch.files:
        if fp.is_create:
            assert fp.new_path is not None
            visibility = tags_of(manifest, fp.new_path).visibility
            if visibility == "internal":
                raise ConflictError(
                    f"{fp.new_path}: community patch creates a file under an internal-visibility rule")
            updates[fp.new_path] = open_target[fp.new_path]
            continue
        assert fp.old_path is not None
        info = strip_map.get(fp.old_path)
        if fp.is_delete:
            if info is not None and info.regions:
                raise ConflictError(
                    f"{fp.old_path}: deleting this file would discard internal-only regions")
            updates[fp.old_path] = None
            continue
        if info is None or not info.regions:
            updates[fp.new_path] = open_target[fp.new_path]
            if fp.new_path != fp.old_path:
                updates[fp.old_path] = None
        else:
            updates[fp.old_path] = _splice_internal(base[fp.old_path], info, fp)

    new_internal = base.with_entries(updates)
    rederived, _ = derive_open_subset(new_internal, manifest)
    if rederived != open_target:
        raise ConflictError("ported patch fails to reproduce the public result")
    return diff_trees(base, new_internal)


@dataclass(frozen=True)
class SyncStepError:
    step: int
    kind: str
    message: str


@dataclass
class SyncReport:
    clean: bool
    steps_replayed: int
    divergence_step: int | None = None
    divergent_paths: tuple[str, ...] = ()
    errors: tuple[SyncStepError, ...] = ()

    def to_data(self) -> dict:
        return {
            "clean": self.clean,
            "steps_replayed": self.steps_replayed,
            "divergence_step": self.divergence_step,
            "divergent_paths": list(self.divergent_paths),
            "errors": [{"step": e.step, "kind": e.kind, "message": e.message} for e in self.errors],
        }


def check_round_trip(tree: SourceTree, manifest: Manifest,
                     patches: list[tuple[str, Patch]]) -> SyncReport:
    """Replay a mixed internal/community patch sequence on both paths.

    After every step the maintained public tree must byte-equal the
    subset freshly derived from the internal tree.  The first
    divergence stops the replay; patch errors are recorded and the
    offending patch skipped, mirroring a sync bot that queues conflicts
    for review and keeps going.
    """
    internal = tree
    maintained, _ = derive_open_subset(internal, manifest)
    errors: list[SyncStepError] = []
    for step, (kind, patch) in enumerate(patches):
        if kind not in ("internal", "open"):
            raise ParseError(f"step {step}: unknown patch kind {kind!r}")
        try:
            # commit both sides only after the whole step succeeded
            if kind == "internal":
                translated = forward_patch(patch, internal, manifest)
                next_internal = apply_patch(internal, patch)
                next_maintained = apply_patch(maintained, translated)
            else:
                ported = port_back(patch, internal, manifest)
                next_internal = apply_patch(internal, ported)
                next_maintained = apply_patch(maintained, patch)
        except (ApplyError, ConflictError, MarkerError) as e:
            errors.append(SyncStepError(step, type(e).__name__, str(e)))
            continue
        internal, maintained = next_internal, next_maintained
        fresh, _ = derive_open_subset(internal, manifest)
        if fresh != maintained:
            differing = sorted(
                p for p in set(fresh.paths()) | set(maintained.paths())
                if fresh.get(p) != maintained.get(p))
            return SyncReport(False, step + 1, step, tuple(differing), tuple(errors))
    return SyncReport(True, len(patches), errors=tuple(errors))
