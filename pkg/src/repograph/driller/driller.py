from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterable, Iterator, Optional, Union

from ..config import ProjectConfig
from ..model import (
    EDGE_LABELS,
    NODE_LABELS,
    CommitBundle,
    CommitNode,
    DeveloperNode,
    FileChange,
    MethodChange,
    UpdateFileProps,
    UpdateMethodProps,
    developer_email,
)
from ..store import GraphStore
from .cache import BundleCache
from .diff import attribute_method_changes, parse_patch
from .git import GitRepo, RawChange, RawCommit
from .metrics import detect_methods, file_nloc, language_for_path

log = logging.getLogger(__name__)

_NULL_BLOB = "0" * 40
_GITLINK = "160000"
_CHANGE_TYPES = {"A": "ADD", "D": "DELETE", "R": "RENAME", "M": "MODIFY", "T": "MODIFY"}


@dataclass
class DrillReport:
    project_id: str
    commits: int = 0
    batches: int = 0
    created: dict = field(default_factory=lambda: {label: 0 for label in NODE_LABELS + EDGE_LABELS})
    updated: dict = field(default_factory=lambda: {label: 0 for label in NODE_LABELS + EDGE_LABELS})
    extraction_ms: float = 0.0
    insert_ms: dict = field(default_factory=lambda: {label: 0.0 for label in NODE_LABELS + EDGE_LABELS})
    insert_total_ms: float = 0.0
    total_ms: float = 0.0
    cache_hits: int = 0
    cache_misses: int = 0

    def most_costly_insert(self) -> tuple[str, float]:
        label = max(sorted(self.insert_ms), key=lambda k: self.insert_ms[k])
        return label, self.insert_ms[label]

    def to_dict(self) -> dict:
        label, ms = self.most_costly_insert()
        return {
            "project_id": self.project_id,
            "commits": self.commits,
            "batches": self.batches,
            "created": dict(self.created),
            "updated": dict(self.updated),
            "extraction_ms": round(self.extraction_ms, 3),
            "insert_ms": {k: round(v, 3) for k, v in self.insert_ms.items()},
            "insert_total_ms": round(self.insert_total_ms, 3),
            "most_costly_insert": {"label": label, "time_ms": round(ms, 3)},
            "total_ms": round(self.total_ms, 3),
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
        }


def make_batches(bundles: Iterable, batch_size: int) -> Iterator[list]:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    it = iter(bundles)
    while True:
        batch = list(islice(it, batch_size))
        if not batch:
            return
        yield batch


def _is_binary(data: Optional[bytes]) -> bool:
    return data is not None and b"\0" in data[:8000]


def _file_change(repo: GitRepo, sha: str, change: RawChange, patch: str, timestamp: int,
                 index_source: bool) -> tuple[FileChange, list[MethodChange]]:
    before = repo.read_blob(change.old_blob) if change.old_path and change.old_blob != _NULL_BLOB else None
    after = repo.read_blob(change.new_blob) if change.new_path and change.new_blob != _NULL_BLOB else None
    change_type = _CHANGE_TYPES.get(change.status, "MODIFY")
    lines = parse_patch(patch)

    if lines.binary or _is_binary(before) or _is_binary(after):
        props = UpdateFileProps(change_type, change.old_path if change_type != "ADD" else None,
                                change.new_path, diff="", nloc=0, added_lines=0, removed_lines=0,
                                timestamp=timestamp)
        return FileChange(props), []

    before_text = before.decode("utf-8", errors="replace") if before is not None else None
    after_text = after.decode("utf-8", errors="replace") if after is not None else None
    props = UpdateFileProps(
        change_type=change_type,
        old_path=change.old_path if change_type != "ADD" else None,
        new_path=change.new_path,
        diff=patch,
        nloc=file_nloc(after_text, change.new_path) if after_text is not None else 0,
        added_lines=len(lines.added),
        removed_lines=len(lines.removed),
        timestamp=timestamp,
        source_before=before_text if index_source else None,
        source_after=after_text if index_source else None,
    )
    methods: list[MethodChange] = []
    if after_text is not None:
        language = language_for_path(change.new_path)
        if language:
            after_decls = detect_methods(after_text, language, change.new_path)
            before_decls = []
            if before_text is not None and language_for_path(change.old_path):
                before_decls = detect_methods(before_text, language_for_path(change.old_path), change.old_path)
            touched = attribute_method_changes(before_decls, after_decls, lines.added_ranges, lines.removed_ranges)
            seen = set()
            for decl in touched:
                if decl.long_name in seen:
                    continue
                seen.add(decl.long_name)
                methods.append(MethodChange(
                    change.new_path, decl.name, decl.long_name,
                    UpdateMethodProps(timestamp=timestamp, **decl.metrics()),
                ))
    return FileChange(props), methods


def extract_commit(repo: GitRepo, commit: Union[str, RawCommit], config: ProjectConfig,
                   branches: Optional[list[str]] = None) -> CommitBundle:
    """Build the bundle for one commit; merges are diffed against their first parent."""
    raw = repo.commit(commit) if isinstance(commit, str) else commit
    parent = raw.parents[0] if raw.parents else None
    changes = repo.changes(raw.sha, parent)
    patches = repo.patches(raw.sha, parent)
    if len(patches) != len(changes):
        patches = [repo.patch_for(raw.sha, parent, [p for p in (c.old_path, c.new_path) if p]) for c in changes]

    bundle = CommitBundle(
        commit=CommitNode(
            project_id=config.project_id,
            sha=raw.sha,
            message=raw.message,
            timestamp=raw.timestamp,
            tz_offset_minutes=raw.tz_offset_minutes,
            is_merge=len(raw.parents) >= 2,
        ),
        developer=DeveloperNode(raw.author_name, developer_email(raw.author_name, raw.author_email)),
        branches=sorted(branches) if branches is not None else repo.containing_branches(raw.sha),
        parents=list(raw.parents),
    )
    for change, patch in zip(changes, patches):
        if _GITLINK in (change.old_mode, change.new_mode):
            continue
        file_change, methods = _file_change(repo, raw.sha, change, patch, raw.timestamp, config.index_source_code)
        bundle.file_changes.append(file_change)
        bundle.method_changes.extend(methods)
    return bundle


def branch_membership(repo: GitRepo) -> dict[str, list[str]]:
    """Map each commit sha to the local branches whose history contains it."""
    member: dict[str, list[str]] = defaultdict(list)
    for name, tip in sorted(repo.branches().items()):
        for sha in repo.rev_list(tip):
            member[sha].append(name)
    return member


def drill(config: ProjectConfig, store: GraphStore) -> DrillReport:
    """Extract every in-range commit and upsert it into ``store`` batch by batch."""
    report = DrillReport(config.project_id)
    t_start = time.perf_counter()
    cache = BundleCache(config.cache_dir, config.fingerprint())
    with GitRepo(config.repo_path) as repo:
        t0 = time.perf_counter()
        commits = [c for c in repo.log() if config.in_range(c.timestamp)]
        member = branch_membership(repo) if commits else {}
        report.extraction_ms += (time.perf_counter() - t0) * 1000.0

        def bundles() -> Iterator[CommitBundle]:
            for raw in commits:
                t = time.perf_counter()
                branches = sorted(member.get(raw.sha, []))
                bundle = cache.get(raw.sha)
                if bundle is None:
                    bundle = extract_commit(repo, raw, config, branches=branches)
                    cache.put(raw.sha, bundle)
                else:
                    bundle.branches = branches
                report.extraction_ms += (time.perf_counter() - t) * 1000.0
                yield bundle

        for batch in make_batches(bundles(), config.batch_size):
            t = time.perf_counter()
            stats = store.insert_batch(batch)
            report.insert_total_ms += (time.perf_counter() - t) * 1000.0
            report.batches += 1
            report.commits += len(batch)
            for label, ms in stats.timings_ms.items():
                report.insert_ms[label] += ms
            for label, n in stats.created.items():
                report.created[label] += n
            for label, n in stats.updated.items():
                report.updated[label] += n
    report.cache_hits = cache.hits
    report.cache_misses = cache.misses
    report.total_ms = (time.perf_counter() - t_start) * 1000.0
    log.info("drilled %d commits of %s in %.0f ms", report.commits, config.project_id, report.total_ms)
    return report
