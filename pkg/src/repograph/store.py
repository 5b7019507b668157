"""Embedded labeled property graph with hash/adjacency indexes and snapshots.

The store keeps everything in memory. Durability comes from explicit
snapshots (``snapshot_save``/``snapshot_load``); interchange goes through the
canonical JSONL dump, which is a pure function of the logical content.
"""
from __future__ import annotations

import fcntl
import hashlib
import json
import os
import tempfile
import threading
import time
import zlib
from collections import Counter, defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .model import (
    EDGE_ENDPOINTS,
    EDGE_LABELS,
    NODE_LABELS,
    BranchNode,
    CommitBundle,
    FileNode,
    MethodNode,
    SchemaError,
    node_from_props,
    node_id,
)

MAGIC = b"GREPO1\n"
SNAPSHOT_FORMAT = 1


class IntegrityError(SchemaError):
    """An edge refers to a node that does not exist."""


class NodeNotFound(LookupError):
    pass


class SnapshotError(Exception):
    pass


class CorruptSnapshotError(SnapshotError):
    pass


class IncompatibleSnapshotError(SnapshotError):
    pass


class StoreLockedError(RuntimeError):
    """Another process holds the writer lock on the database file."""


def encode_props(props: dict) -> str:
    for key, value in props.items():
        if not isinstance(value, (str, int, float, bool)):
            raise SchemaError(f"property {key!r} is not a scalar: {type(value).__name__}")
    return json.dumps(props, sort_keys=True, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


class RWLock:
    """Many readers or one writer."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    @contextmanager
    def read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


@dataclass
class InsertStats:
    """Outcome of inserting one or more bundles."""

    timings_ms: dict = field(default_factory=lambda: {label: 0.0 for label in NODE_LABELS + EDGE_LABELS})
    created: Counter = field(default_factory=Counter)
    updated: Counter = field(default_factory=Counter)

    def merge(self, other: "InsertStats") -> None:
        for label, ms in other.timings_ms.items():
            self.timings_ms[label] = self.timings_ms.get(label, 0.0) + ms
        self.created.update(other.created)
        self.updated.update(other.updated)


class _Element:
    __slots__ = ("label", "props", "encoded")

    def __init__(self, label: str, props: dict, encoded: str):
        self.label = label
        self.props = props
        self.encoded = encoded


class GraphStore:
    def __init__(self):
        self._nodes: dict[str, _Element] = {}
        self._label_index: dict[str, dict[Optional[str], set]] = {label: defaultdict(set) for label in NODE_LABELS}
        self._edges: dict[tuple, _Element] = {}
        self._out: dict[tuple, dict] = defaultdict(dict)
        self._in: dict[tuple, dict] = defaultdict(dict)
        self._alias: dict[tuple, str] = {}
        # commit id -> [((change_type, old_path, new_path), file id)] as first resolved
        self._resolved: dict[str, list] = {}
        self._payload_bytes: Counter = Counter()
        self.read_calls: Counter = Counter()
        self.lock = RWLock()

    # -- low level writes (callers hold the write lock) --

    def _put_node(self, label: str, nid: str, props: dict, encoded: Optional[str] = None) -> str:
        if encoded is None:
            encoded = encode_props(props)
        old = self._nodes.get(nid)
        if old is not None:
            if old.label != label:
                raise SchemaError(f"node {nid} is a {old.label}, not a {label}")
            self._payload_bytes[label] -= len(old.encoded.encode("utf-8"))
            if old.props.get("project_id") != props.get("project_id"):
                self._label_index[label][old.props.get("project_id")].discard(nid)
        self._nodes[nid] = _Element(label, props, encoded)
        self._label_index[label][props.get("project_id")].add(nid)
        self._payload_bytes[label] += len(encoded.encode("utf-8"))
        return "created" if old is None else "updated"

    def _put_edge(self, label: str, src: str, dst: str, props: dict, encoded: Optional[str] = None) -> str:
        if encoded is None:
            encoded = encode_props(props)
        key = (label, src, dst)
        old = self._edges.get(key)
        if old is not None:
            self._payload_bytes[label] -= len(old.encoded.encode("utf-8"))
        element = _Element(label, props, encoded)
        self._edges[key] = element
        self._out[(src, label)][dst] = element
        self._in[(dst, label)][src] = element
        self._payload_bytes[label] += len(encoded.encode("utf-8"))
        return "created" if old is None else "updated"

    def _check_edge(self, label: str, src: str, dst: str, staged: dict) -> None:
        if label not in EDGE_ENDPOINTS:
            raise SchemaError(f"unknown edge label {label!r}")
        want_src, want_dst = EDGE_ENDPOINTS[label]
        for nid, want in ((src, want_src), (dst, want_dst)):
            have = staged.get(nid)
            if have is None:
                element = self._nodes.get(nid)
                if element is None:
                    raise IntegrityError(f"{label} edge endpoint {nid} does not exist")
                have = element.label
            if have != want:
                raise SchemaError(f"{label} edge expects {want_src}->{want_dst}, got a {have} at {nid}")

    # -- public writes --

    def upsert_node(self, node) -> str:
        if node.label not in NODE_LABELS:
            raise SchemaError(f"unknown node label {node.label!r}")
        props = node.props()
        encoded = encode_props(props)
        with self.lock.write():
            return self._put_node(node.label, node.id, props, encoded)

    def upsert_edge(self, edge) -> str:
        encoded = encode_props(edge.props)
        with self.lock.write():
            self._check_edge(edge.label, edge.src, edge.dst, {})
            return self._put_edge(edge.label, edge.src, edge.dst, dict(edge.props), encoded)

    def _stage_bundle(self, bundle: CommitBundle):
        """Plan every write of a bundle and validate it against the schema."""
        commit = bundle.commit
        project = commit.project_id
        nodes = [bundle.developer, commit]
        edges = [("Author", bundle.developer.id, commit.id, {})]
        for parent in bundle.parents:
            parent_id = node_id("Commit", [project, parent])
            element = self._nodes.get(parent_id)
            if element is not None and element.label == "Commit":
                edges.append(("Parent", commit.id, parent_id, {}))
        for name in bundle.branches:
            branch = BranchNode(project, name)
            nodes.append(branch)
            edges.append(("InBranch", commit.id, branch.id, {}))

        alias: dict[str, str] = {}
        files: dict[str, FileNode] = {}

        def resolve(path):
            fid = alias.get(path) or self._alias.get((project, path))
            if fid is None:
                return None
            if fid in files:
                return files[fid]
            element = self._nodes[fid]
            return node_from_props("File", element.props)

        # A commit already in the store keeps the file identities it got the
        # first time; resolving again against today's alias index could pick
        # a node that only took over the path later in history.
        keys = [(c.props.change_type, c.props.old_path or "", c.props.new_path or "") for c in bundle.file_changes]
        recorded = self._resolved.get(commit.id)
        replay = recorded is not None and [k for k, _ in recorded] == keys
        resolved = []
        for i, change in enumerate(bundle.file_changes):
            p = change.props
            if replay and recorded[i][1] in self._nodes:
                fid = recorded[i][1]
                for path in (p.old_path, p.new_path):
                    if path:
                        alias[path] = fid
                edges.append(("UpdateFile", commit.id, fid, p.props()))
                resolved.append((keys[i], fid))
                continue
            if p.change_type == "RENAME":
                node = resolve(p.old_path) or FileNode(project, p.old_path, p.old_path)
                node = replace(node, current_path=p.new_path)
                alias[p.old_path] = alias[p.new_path] = node.id
            elif p.change_type == "DELETE":
                node = resolve(p.old_path) or FileNode(project, p.old_path, p.old_path)
                alias[p.old_path] = node.id
            else:
                node = resolve(p.new_path) or FileNode(project, p.new_path, p.new_path)
                node = replace(node, current_path=p.new_path)
                alias[p.new_path] = node.id
            files[node.id] = node
            edges.append(("UpdateFile", commit.id, node.id, p.props()))
            resolved.append((keys[i], node.id))
        nodes.extend(files.values())

        for change in bundle.method_changes:
            fid = alias.get(change.path)
            if fid is None:
                raise IntegrityError(f"method {change.long_name} refers to unchanged file {change.path}")
            method = MethodNode(project, fid, change.name, change.long_name)
            nodes.append(method)
            edges.append(("HasMethod", fid, method.id, {}))
            edges.append(("UpdateMethod", commit.id, method.id, change.props.props()))

        staged: dict[str, str] = {}
        planned_nodes = []
        for node in nodes:
            nid = node.id
            existing = self._nodes.get(nid)
            if existing is not None and existing.label != node.label:
                raise SchemaError(f"node {nid} is a {existing.label}, not a {node.label}")
            if staged.get(nid, node.label) != node.label:
                raise SchemaError(f"node {nid} staged under two labels")
            staged[nid] = node.label
            planned_nodes.append((node.label, nid, node.props()))
        for label, src, dst, _ in edges:
            self._check_edge(label, src, dst, staged)
        new_alias = {} if replay else {(project, path): fid for path, fid in alias.items()}
        return planned_nodes, edges, new_alias, (commit.id, resolved)

    def _apply(self, planned_nodes, edges, alias, resolved, stats: InsertStats) -> None:
        timings = stats.timings_ms
        for label, nid, props in planned_nodes:
            t0 = time.perf_counter()
            outcome = self._put_node(label, nid, props)
            timings[label] += (time.perf_counter() - t0) * 1000.0
            (stats.created if outcome == "created" else stats.updated)[label] += 1
        for label, src, dst, props in edges:
            t0 = time.perf_counter()
            outcome = self._put_edge(label, src, dst, props)
            timings[label] += (time.perf_counter() - t0) * 1000.0
            (stats.created if outcome == "created" else stats.updated)[label] += 1
        self._alias.update(alias)
        self._resolved[resolved[0]] = resolved[1]

    def insert_bundle(self, bundle: CommitBundle) -> InsertStats:
        """Insert nodes then edges of one bundle, all or nothing."""
        return self.insert_batch([bundle])

    def insert_batch(self, bundles: Iterable[CommitBundle]) -> InsertStats:
        stats = InsertStats()
        with self.lock.write():
            for bundle in bundles:
                planned_nodes, edges, alias, resolved = self._stage_bundle(bundle)
                self._apply(planned_nodes, edges, alias, resolved, stats)
        return stats

    # -- reads --

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def has_node(self, nid: str) -> bool:
        return nid in self._nodes

    def node_label(self, nid: str) -> Optional[str]:
        element = self._nodes.get(nid)
        return element.label if element else None

    def node_props(self, nid: str) -> Optional[dict]:
        element = self._nodes.get(nid)
        return dict(element.props) if element else None

    def get_node(self, nid: str):
        with self.lock.read():
            element = self._nodes.get(nid)
            if element is None:
                return None
            return node_from_props(element.label, element.props)

    def node_ids(self, label: str, project_id: Optional[str] = None) -> list[str]:
        with self.lock.read():
            partitions = self._label_index[label]
            if label == "Developer" or project_id is None:
                ids = set().union(*partitions.values()) if partitions else set()
            else:
                ids = set(partitions.get(project_id, ()))
        return sorted(ids)

    def nodes_by_label(self, label: str, project_id: Optional[str] = None) -> list:
        if label not in NODE_LABELS:
            raise SchemaError(f"unknown node label {label!r}")
        ids = self.node_ids(label, project_id)
        with self.lock.read():
            return [node_from_props(label, self._nodes[nid].props) for nid in ids]

    def resolve_path(self, project_id: str, path: str) -> Optional[FileNode]:
        with self.lock.read():
            fid = self._alias.get((project_id, path))
            if fid is None:
                return None
            return node_from_props("File", self._nodes[fid].props)

    def neighbors(self, nid: str, edge_label: str, direction: str = "out") -> list[tuple[str, dict]]:
        if direction not in ("out", "in"):
            raise ValueError("direction must be 'out' or 'in'")
        with self.lock.read():
            if nid not in self._nodes:
                raise NodeNotFound(nid)
            self.read_calls[edge_label] += 1
            index = self._out if direction == "out" else self._in
            adj = index.get((nid, edge_label), {})
            return [(peer, dict(element.props)) for peer, element in adj.items()]

    def degree(self, nid: str, edge_label: str, direction: str = "out") -> int:
        index = self._out if direction == "out" else self._in
        with self.lock.read():
            return len(index.get((nid, edge_label), ()))

    def traverse(self, start: str, steps: list[tuple[str, str]]) -> list[tuple]:
        """Follow a fixed edge path in one call.

        Returns one tuple per complete path: the visited node ids after
        ``start`` followed by the properties of the final edge.
        """
        with self.lock.read():
            if start not in self._nodes:
                raise NodeNotFound(start)
            for label, _ in steps:
                self.read_calls[label] += 1
            frontier = [((), start, {})]
            for label, direction in steps:
                index = self._out if direction == "out" else self._in
                nxt = []
                for path, nid, _ in frontier:
                    for peer, element in index.get((nid, label), {}).items():
                        nxt.append((path + (peer,), peer, element.props))
                frontier = nxt
            return [path + (dict(props),) for path, _, props in frontier]

    def label_counts(self) -> dict:
        with self.lock.read():
            counts = {label: sum(len(ids) for ids in self._label_index[label].values()) for label in NODE_LABELS}
            edge_counts = Counter(key[0] for key in self._edges)
        counts.update({label: edge_counts.get(label, 0) for label in EDGE_LABELS})
        return counts

    def payload_bytes(self, label: str) -> int:
        return self._payload_bytes[label]

    def project_ids(self) -> list[str]:
        with self.lock.read():
            found = set()
            for label in NODE_LABELS:
                found.update(p for p, ids in self._label_index[label].items() if p is not None and ids)
        return sorted(found)

    # -- canonical dump --

    def _scope(self, project_id: Optional[str]) -> Optional[set]:
        if project_id is None:
            return None
        keep = set()
        for label in NODE_LABELS:
            keep.update(self._label_index[label].get(project_id, ()))
        for (dev, _label), adj in list(self._out.items()):
            if _label == "Author" and any(c in keep for c in adj):
                keep.add(dev)
        return keep

    def dump_lines(self, project_id: Optional[str] = None) -> Iterator[str]:
        with self.lock.read():
            keep = self._scope(project_id)
            node_keys = sorted(
                (element.label, nid) for nid, element in self._nodes.items() if keep is None or nid in keep
            )
            for label, nid in node_keys:
                yield '{"t":"n","l":%s,"id":"%s","p":%s}' % (
                    json.dumps(label), nid, self._nodes[nid].encoded)
            edge_keys = sorted(
                key for key in self._edges if keep is None or (key[1] in keep and key[2] in keep)
            )
            for key in edge_keys:
                label, src, dst = key
                yield '{"t":"e","l":%s,"s":"%s","d":"%s","p":%s}' % (
                    json.dumps(label), src, dst, self._edges[key].encoded)

    def canonical_dump(self, project_id: Optional[str] = None) -> str:
        return "".join(line + "\n" for line in self.dump_lines(project_id))

    def export_jsonl(self, path, project_id: Optional[str] = None) -> int:
        count = 0
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.dump_lines(project_id):
                fh.write(line)
                fh.write("\n")
                count += 1
        return count

    # -- integrity --

    def check_integrity(self) -> list[str]:
        """Full scan of the store invariants; returns a list of violations."""
        problems = []
        with self.lock.read():
            for (label, src, dst), element in self._edges.items():
                want_src, want_dst = EDGE_ENDPOINTS[label]
                for nid, want in ((src, want_src), (dst, want_dst)):
                    node = self._nodes.get(nid)
                    if node is None:
                        problems.append(f"dangling {label} endpoint {nid}")
                    elif node.label != want:
                        problems.append(f"{label} endpoint {nid} is a {node.label}")
                if self._out.get((src, label), {}).get(dst) is not element:
                    problems.append(f"out index misses {label} {src}->{dst}")
                if self._in.get((dst, label), {}).get(src) is not element:
                    problems.append(f"in index misses {label} {src}->{dst}")
            out_total = sum(len(adj) for adj in self._out.values())
            in_total = sum(len(adj) for adj in self._in.values())
            if not out_total == in_total == len(self._edges):
                problems.append(f"adjacency sizes differ: out={out_total} in={in_total} edges={len(self._edges)}")
            indexed = 0
            for label in NODE_LABELS:
                for project, ids in self._label_index[label].items():
                    for nid in ids:
                        indexed += 1
                        node = self._nodes.get(nid)
                        if node is None or node.label != label or node.props.get("project_id") != project:
                            problems.append(f"label index entry {label}/{project}/{nid} is stale")
            if indexed != len(self._nodes):
                problems.append("label index does not partition the node set")
            for (project, path), fid in self._alias.items():
                node = self._nodes.get(fid)
                if node is None or node.label != "File" or node.props["project_id"] != project:
                    problems.append(f"alias {project}:{path} points at {fid}")
        return problems

    # -- snapshots --

    def snapshot_save(self, path) -> None:
        with self.lock.read():
            payload = {
                "nodes": [[e.label, nid, e.props] for nid, e in self._nodes.items()],
                "edges": [[label, src, dst, e.props] for (label, src, dst), e in self._edges.items()],
                "alias": [[project, p, fid] for (project, p), fid in self._alias.items()],
                "resolved": [[cid, [[list(k), fid] for k, fid in items]] for cid, items in self._resolved.items()],
            }
        body = zlib.compress(json.dumps(payload, ensure_ascii=False).encode("utf-8"), 6)
        header = json.dumps(
            {"format": SNAPSHOT_FORMAT, "length": len(body), "sha256": hashlib.sha256(body).hexdigest()}
        ).encode("ascii")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(MAGIC + header + b"\n" + body)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def snapshot_load(cls, path) -> "GraphStore":
        raw = Path(path).read_bytes()
        if not raw.startswith(MAGIC):
            first = raw.split(b"\n", 1)[0]
            if first.startswith(b"GREPO") and raw.count(b"\n") >= 1:
                raise IncompatibleSnapshotError(f"unsupported snapshot version {first.decode(errors='replace')}")
            raise CorruptSnapshotError(f"{path} is not a snapshot")
        rest = raw[len(MAGIC):]
        header_line, sep, body = rest.partition(b"\n")
        try:
            header = json.loads(header_line)
        except ValueError as exc:
            raise CorruptSnapshotError("unreadable snapshot header") from exc
        if not sep or header.get("format") != SNAPSHOT_FORMAT:
            raise CorruptSnapshotError("bad snapshot header")
        if len(body) != header.get("length") or hashlib.sha256(body).hexdigest() != header.get("sha256"):
            raise CorruptSnapshotError("snapshot payload truncated or damaged")
        try:
            payload = json.loads(zlib.decompress(body))
        except (zlib.error, ValueError) as exc:
            raise CorruptSnapshotError("snapshot payload unreadable") from exc
        store = cls()
        for label, nid, props in payload["nodes"]:
            store._put_node(label, nid, props)
        for label, src, dst, props in payload["edges"]:
            store._put_edge(label, src, dst, props)
        for project, p, fid in payload["alias"]:
            store._alias[(project, p)] = fid
        for cid, items in payload.get("resolved", []):
            store._resolved[cid] = [(tuple(k), fid) for k, fid in items]
        return store


@contextmanager
def writer_lock(db_path) -> Iterator[None]:
    lock_path = str(db_path) + ".lock"
    Path(lock_path).parent.mkdir(parents=True, exist_ok=True)
    fh = open(lock_path, "a")
    try:
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError as exc:
            raise StoreLockedError(f"{db_path} is locked by another writer") from exc
        yield
    finally:
        fh.close()


@contextmanager
def open_store(db_path, writable: bool = True) -> Iterator[GraphStore]:
    """Load the snapshot at ``db_path`` (or start empty) and save it back on success."""
    db_path = Path(db_path)
    if not writable:
        yield GraphStore.snapshot_load(db_path) if db_path.exists() else GraphStore()
        return
    with writer_lock(db_path):
        store = GraphStore.snapshot_load(db_path) if db_path.exists() else GraphStore()
        yield store
        store.snapshot_save(db_path)
