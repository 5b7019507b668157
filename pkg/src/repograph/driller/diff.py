"""Unified diff hunk parsing and changed-method attribution."""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .metrics import MethodDecl

_HUNK = re.compile(r"@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


@dataclass
class DiffLines:
    added: list[int] = field(default_factory=list)    # line numbers in the new file
    removed: list[int] = field(default_factory=list)  # line numbers in the old file
    binary: bool = False

    @property
    def added_ranges(self) -> list[tuple[int, int]]:
        return to_ranges(self.added)

    @property
    def removed_ranges(self) -> list[tuple[int, int]]:
        return to_ranges(self.removed)


def to_ranges(lines: list[int]) -> list[tuple[int, int]]:
    ranges: list[tuple[int, int]] = []
    for n in sorted(lines):
        if ranges and n == ranges[-1][1] + 1:
            ranges[-1] = (ranges[-1][0], n)
        else:
            ranges.append((n, n))
    return ranges


def parse_patch(patch: str) -> DiffLines:
    result = DiffLines()
    old_line = new_line = 0
    in_hunk = False
    for line in patch.split("\n"):
        if line.startswith("@@"):
            m = _HUNK.match(line)
            if m:
                old_line, new_line = int(m.group(1)), int(m.group(3))
                in_hunk = True
            continue
        if not in_hunk:
            if line.startswith("Binary files ") or line.startswith("GIT binary patch"):
                result.binary = True
            continue
        if line.startswith("diff --git "):
            in_hunk = False
        elif line.startswith("+"):
            result.added.append(new_line)
            new_line += 1
        elif line.startswith("-"):
            result.removed.append(old_line)
            old_line += 1
        elif line.startswith(" "):
            old_line += 1
            new_line += 1
    return result


def _intersects(start: int, end: int, ranges: list[tuple[int, int]]) -> bool:
    return any(lo <= end and start <= hi for lo, hi in ranges)


def attribute_method_changes(
    before: list[MethodDecl],
    after: list[MethodDecl],
    hunks: list[tuple[int, int]],
    deleted_ranges: list[tuple[int, int]],
) -> list[MethodDecl]:
    """Methods of the new file version touched by a change.

    A method counts as changed when its new span holds an added line, when it
    is new (no method of that long name before), or when lines were removed
    from inside its old span.
    """
    old = {d.long_name: d for d in before}
    changed = []
    for decl in after:
        prior = old.get(decl.long_name)
        if (
            prior is None
            or _intersects(decl.start_line, decl.end_line, hunks)
            or _intersects(prior.start_line, prior.end_line, deleted_ranges)
        ):
            changed.append(decl)
    return changed
