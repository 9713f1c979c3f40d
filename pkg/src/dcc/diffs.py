"""Unified diff parsing, generation and zero-fuzz application.

Patches are plain unified diffs: ``--- a/<path>``, ``+++ b/<path>``,
``@@ -s,l +s,l @@`` and ``/dev/null`` for creates and deletes.  No
timestamps are emitted so output is byte-reproducible.  Application
requires exact context match; fuzzy placement would undermine the
byte-equality guarantees the sync model depends on.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass, field

from .errors import ApplyError, ParseError
from .model import SourceTree

_HUNK_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")

DEV_NULL = "/dev/null"


@dataclass(frozen=True)
class Hunk:
    old_start: int
    old_len: int
    new_start: int
    new_len: int
    #: (tag, text) pairs; tag in {' ', '-', '+'}, text keeps its trailing \n.
    lines: tuple[tuple[str, str], ...]

    def validate(self) -> None:
        old = sum(1 for t, _ in self.lines if t in " -")
        new = sum(1 for t, _ in self.lines if t in " +")
        if old != self.old_len or new != self.new_len:
            raise ParseError(
                f"hunk line counts ({old},{new}) do not match header "
                f"(-{self.old_start},{self.old_len} +{self.new_start},{self.new_len})")


@dataclass(frozen=True)
class FilePatch:
    old_path: str | None
    new_path: str | None
    hunks: tuple[Hunk, ...]

    @property
    def is_create(self) -> bool:
        return self.old_path is None

    @property
    def is_delete(self) -> bool:
        return self.new_path is None

    def touched_paths(self) -> set[str]:
        return {p for p in (self.old_path, self.new_path) if p is not None}


@dataclass(frozen=True)
class Patch:
    files: tuple[FilePatch, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.files

    def touched_paths(self) -> set[str]:
        out: set[str] = set()
        for fp in self.files:
            out |= fp.touched_paths()
        return out

    def file_for(self, path: str) -> FilePatch | None:
        for fp in self.files:
            if path in fp.touched_paths():
                return fp
        return None


@dataclass
class _FileBuilder:
    old_path: str | None = None
    new_path: str | None = None
    hunks: list[Hunk] = field(default_factory=list)


def _parse_header_path(raw: str, prefix: str, lineno: int) -> str | None:
    raw = raw.rstrip("\n")
    if raw == DEV_NULL:
        return None
    if not raw.startswith(prefix):
        raise ParseError(f"line {lineno}: expected {prefix!r} path prefix or {DEV_NULL}, got {raw!r}")
    path = raw[len(prefix):]
    if not path:
        raise ParseError(f"line {lineno}: empty path in file header")
    return path


def parse_patch(text: str) -> Patch:
    """Parse unified diff text.  Empty text parses to an empty patch."""
    files: list[FilePatch] = []
    lines = text.splitlines(keepends=True)
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.strip() == "":
            i += 1
            continue
        if not line.startswith("--- "):
            raise ParseError(f"line {i + 1}: expected '--- ' file header, got {line!r}")
        old_path = _parse_header_path(line[4:], "a/", i + 1)
        i += 1
        if i >= len(lines) or not lines[i].startswith("+++ "):
            raise ParseError(f"line {i + 1}: expected '+++ ' file header")
        new_path = _parse_header_path(lines[i][4:], "b/", i + 1)
        if old_path is None and new_path is None:
            raise ParseError(f"line {i + 1}: both sides are {DEV_NULL}")
        i += 1
        hunks: list[Hunk] = []
        while i < len(lines):
            m = _HUNK_RE.match(lines[i])
            if not m:
                break
            old_start = int(m.group(1))
            old_len = int(m.group(2)) if m.group(2) is not None else 1
            new_start = int(m.group(3))
            new_len = int(m.group(4)) if m.group(4) is not None else 1
            i += 1
            body: list[tuple[str, str]] = []
            remaining_old, remaining_new = old_len, new_len
            while i < len(lines) and (remaining_old > 0 or remaining_new > 0):
                tag, rest = lines[i][:1], lines[i][1:]
                if tag == " ":
                    remaining_old -= 1
                    remaining_new -= 1
                elif tag == "-":
                    remaining_old -= 1
                elif tag == "+":
                    remaining_new -= 1
                else:
                    raise ParseError(f"line {i + 1}: unexpected hunk body line {lines[i]!r}")
                if remaining_old < 0 or remaining_new < 0:
                    raise ParseError(f"line {i + 1}: hunk body longer than header declares")
                if not rest.endswith("\n"):
                    rest += "\n"
                body.append((tag, rest))
                i += 1
            hunk = Hunk(old_start, old_len, new_start, new_len, tuple(body))
            hunk.validate()
            if hunks and hunk.old_start < hunks[-1].old_start + hunks[-1].old_len:
                raise ParseError("hunks out of order or overlapping")
            hunks.append(hunk)
        files.append(FilePatch(old_path, new_path, tuple(hunks)))
    return Patch(tuple(files))


def format_patch(patch: Patch) -> str:
    out: list[str] = []
    for fp in patch.files:
        out.append(f"--- {DEV_NULL}\n" if fp.old_path is None else f"--- a/{fp.old_path}\n")
        out.append(f"+++ {DEV_NULL}\n" if fp.new_path is None else f"+++ b/{fp.new_path}\n")
        for h in fp.hunks:
            out.append(f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@\n")
            for tag, text in h.lines:
                out.append(tag + text)
    return "".join(out)


def _file_hunks(old: str, new: str, context: int = 3) -> tuple[Hunk, ...]:
    """Hunks for one file pair, built from difflib's grouped opcodes."""
    old_lines = old.splitlines(keepends=True)
    new_lines = new.splitlines(keepends=True)
    hunks: list[Hunk] = []
    matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
    for group in matcher.get_grouped_opcodes(context):
        body: list[tuple[str, str]] = []
        first, last = group[0], group[-1]
        for op, i1, i2, j1, j2 in group:
            if op == "equal":
                body.extend((" ", t) for t in old_lines[i1:i2])
                continue
            if op in ("replace", "delete"):
                body.extend(("-", t) for t in old_lines[i1:i2])
            if op in ("replace", "insert"):
                body.extend(("+", t) for t in new_lines[j1:j2])
        old_len = last[2] - first[1]
        new_len = last[4] - first[3]
        # Unified diff convention: zero-length ranges anchor on the
        # preceding line, nonempty ranges are 1-based.
        old_start = first[1] + 1 if old_len else first[1]
        new_start = first[3] + 1 if new_len else first[3]
        hunks.append(Hunk(old_start, old_len, new_start, new_len, tuple(body)))
    return tuple(hunks)


def diff_trees(old: SourceTree, new: SourceTree, context: int = 3) -> Patch:
    """Unified diff between two trees, files ordered lexicographically."""
    files: list[FilePatch] = []
    for path in sorted(set(old.paths()) | set(new.paths())):
        before, after = old.get(path), new.get(path)
        if before == after:
            continue
        if before is None:
            files.append(FilePatch(None, path, _file_hunks("", after, context)))
        elif after is None:
            files.append(FilePatch(path, None, _file_hunks(before, "", context)))
        else:
            files.append(FilePatch(path, path, _file_hunks(before, after, context)))
    return Patch(tuple(files))


def apply_file_patch(content: str, fp: FilePatch) -> str:
    """Apply one file's hunks with exact context matching."""
    old_lines = content.splitlines(keepends=True)
    out: list[str] = []
    cursor = 0  # next old line index (0-based) not yet emitted
    for h in fp.hunks:
        anchor = h.old_start - 1 if h.old_len else h.old_start
        if anchor < cursor or anchor > len(old_lines):
            raise ApplyError(f"{fp.old_path}: hunk at -{h.old_start},{h.old_len} out of range")
        out.extend(old_lines[cursor:anchor])
        cursor = anchor
        for tag, text in h.lines:
            if tag == "+":
                out.append(text)
                continue
            if cursor >= len(old_lines) or old_lines[cursor] != text:
                found = old_lines[cursor] if cursor < len(old_lines) else "<eof>"
                raise ApplyError(
                    f"{fp.old_path}: context mismatch at line {cursor + 1}: "
                    f"expected {text!r}, found {found!r}")
            if tag == " ":
                out.append(text)
            cursor += 1
    out.extend(old_lines[cursor:])
    return "".join(out)


def apply_patch(tree: SourceTree, patch: Patch) -> SourceTree:
    """Apply a patch to a tree; zero fuzz, raises ApplyError on any mismatch."""
    updates: dict[str, str | None] = {}
    for fp in patch.files:
        if fp.is_create:
            assert fp.new_path is not None
            if fp.new_path in tree or fp.new_path in updates:
                raise ApplyError(f"{fp.new_path}: create target already exists")
            updates[fp.new_path] = apply_file_patch("", fp)
        elif fp.is_delete:
            assert fp.old_path is not None
            if fp.old_path not in tree:
                raise ApplyError(f"{fp.old_path}: delete target missing")
            result = apply_file_patch(tree[fp.old_path], fp)
            if result != "":
                raise ApplyError(f"{fp.old_path}: delete hunks do not cover whole file")
            updates[fp.old_path] = None
        else:
            assert fp.old_path is not None and fp.new_path is not None
            if fp.old_path not in tree:
                raise ApplyError(f"{fp.old_path}: patch target missing")
            new_content = apply_file_patch(tree[fp.old_path], fp)
            if fp.new_path != fp.old_path:
                updates[fp.old_path] = None
            updates[fp.new_path] = new_content
    return tree.with_entries(updates)
