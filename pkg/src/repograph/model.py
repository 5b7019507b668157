"""Graph schema shared by the driller, the store and the miners.

Nodes carry deterministic ids derived from their identity fields, so the same
repository drilled twice (or on two machines) yields the same graph.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar, Optional

NODE_LABELS = ("Developer", "Commit", "Branch", "File", "Method")
EDGE_LABELS = ("Author", "Parent", "InBranch", "HasMethod", "UpdateFile", "UpdateMethod")

# (source label, destination label) for every edge label
EDGE_ENDPOINTS = {
    "Author": ("Developer", "Commit"),
    "Parent": ("Commit", "Commit"),
    "InBranch": ("Commit", "Branch"),
    "HasMethod": ("File", "Method"),
    "UpdateFile": ("Commit", "File"),
    "UpdateMethod": ("Commit", "Method"),
}

CHANGE_TYPES = ("ADD", "MODIFY", "DELETE", "RENAME")

_HEX40 = re.compile(r"[0-9a-f]{40}\Z")


class SchemaError(ValueError):
    """A node or edge violates the graph schema."""


class IdentityError(SchemaError):
    """Identity fields cannot produce a node id."""


def node_id(kind: str, parts: list[str] | tuple[str, ...]) -> str:
    if kind not in NODE_LABELS:
        raise IdentityError(f"unknown node label {kind!r}")
    if not parts:
        raise IdentityError("node identity needs at least one part")
    for part in parts:
        if not isinstance(part, str) or part == "":
            raise IdentityError(f"empty identity part for {kind}: {parts!r}")
    raw = kind + "|" + "|".join(parts)
    return hashlib.sha1(raw.encode("utf-8")).hexdigest()


def is_node_id(value: Any) -> bool:
    return isinstance(value, str) and _HEX40.match(value) is not None


def file_type_of(path: str) -> str:
    """Lowercased extension of the last path segment, or ``"unknown"``."""
    segment = path.rsplit("/", 1)[-1]
    stem, dot, ext = segment.rpartition(".")
    if not dot or not ext or not stem:
        return "unknown"
    return ext.lower()


def validate_project_id(value: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError("project id must be a non-empty string")
    if "|" in value:
        raise SchemaError(f"project id may not contain '|': {value!r}")
    if len(value.encode("utf-8")) > 128:
        raise SchemaError("project id longer than 128 bytes")
    return value


def developer_email(name: str, email: str) -> str:
    """Dedup key for a developer; synthesized when git recorded no email."""
    email = (email or "").strip().lower()
    if email:
        return email
    return "unknown@" + (name or "").strip().lower().replace(" ", ".")


@dataclass(frozen=True)
class DeveloperNode:
    label: ClassVar[str] = "Developer"
    name: str
    email: str

    @property
    def id(self) -> str:
        return node_id("Developer", [self.email])

    @property
    def project_id(self) -> None:
        return None

    def props(self) -> dict:
        return {"name": self.name, "email": self.email}


@dataclass(frozen=True)
class CommitNode:
    label: ClassVar[str] = "Commit"
    project_id: str
    sha: str
    message: str
    timestamp: int
    tz_offset_minutes: int
    is_merge: bool

    @property
    def id(self) -> str:
        return node_id("Commit", [self.project_id, self.sha])

    def props(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BranchNode:
    label: ClassVar[str] = "Branch"
    project_id: str
    name: str

    @property
    def id(self) -> str:
        return node_id("Branch", [self.project_id, self.name])

    def props(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FileNode:
    label: ClassVar[str] = "File"
    project_id: str
    first_seen_path: str
    current_path: str

    @property
    def id(self) -> str:
        return node_id("File", [self.project_id, self.first_seen_path])

    @property
    def file_type(self) -> str:
        return file_type_of(self.current_path)

    def props(self) -> dict:
        props = asdict(self)
        props["file_type"] = self.file_type
        return props


@dataclass(frozen=True)
class MethodNode:
    label: ClassVar[str] = "Method"
    project_id: str
    file_id: str
    name: str
    long_name: str

    @property
    def id(self) -> str:
        return node_id("Method", [self.project_id, self.file_id, self.long_name])

    def props(self) -> dict:
        return asdict(self)


NODE_TYPES = {cls.label: cls for cls in (DeveloperNode, CommitNode, BranchNode, FileNode, MethodNode)}


def node_from_props(label: str, props: dict):
    """Rebuild a typed node from stored properties (derived keys dropped)."""
    cls = NODE_TYPES[label]
    fields = {k: v for k, v in props.items() if k in cls.__dataclass_fields__}
    return cls(**fields)


@dataclass(frozen=True)
class Edge:
    label: str
    src: str
    dst: str
    props: dict = field(default_factory=dict, compare=False, hash=False)


def _drop_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


@dataclass
class UpdateFileProps:
    change_type: str
    old_path: Optional[str]
    new_path: Optional[str]
    diff: str
    nloc: int
    added_lines: int
    removed_lines: int
    timestamp: int
    source_before: Optional[str] = None
    source_after: Optional[str] = None

    def __post_init__(self):
        if self.change_type not in CHANGE_TYPES:
            raise SchemaError(f"bad change type {self.change_type!r}")
        if self.change_type == "RENAME" and (
            not self.old_path or not self.new_path or self.old_path == self.new_path
        ):
            raise SchemaError("RENAME needs two distinct paths")

    @property
    def path(self) -> str:
        """Path the change is filed under (the new one unless deleted)."""
        return self.new_path if self.new_path is not None else self.old_path

    def props(self) -> dict:
        return _drop_none(asdict(self))


@dataclass
class UpdateMethodProps:
    complexity: int
    nloc: int
    token_count: int
    parameter_count: int
    timestamp: int

    def __post_init__(self):
        if self.complexity < 1:
            raise SchemaError("cyclomatic complexity is at least 1")

    def props(self) -> dict:
        return asdict(self)


@dataclass
class FileChange:
    """One changed file of a commit; file identity is resolved at insert time."""

    props: UpdateFileProps


@dataclass
class MethodChange:
    path: str
    name: str
    long_name: str
    props: UpdateMethodProps


@dataclass
class CommitBundle:
    """Everything extracted from a single commit."""

    commit: CommitNode
    developer: DeveloperNode
    branches: list[str] = field(default_factory=list)
    parents: list[str] = field(default_factory=list)
    file_changes: list[FileChange] = field(default_factory=list)
    method_changes: list[MethodChange] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CommitBundle":
        return cls(
            commit=CommitNode(**data["commit"]),
            developer=DeveloperNode(**data["developer"]),
            branches=list(data["branches"]),
            parents=list(data["parents"]),
            file_changes=[FileChange(UpdateFileProps(**fc["props"])) for fc in data["file_changes"]],
            method_changes=[
                MethodChange(mc["path"], mc["name"], mc["long_name"], UpdateMethodProps(**mc["props"]))
                for mc in data["method_changes"]
            ],
        )
