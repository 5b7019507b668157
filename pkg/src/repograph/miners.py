"""Read-only query layer over a drilled store.

One miner per node type (commits, developers, files, methods) plus the
``MineManager`` that builds them lazily over a single store and project.
Every result is a detached :class:`QueryResult` with a total, documented
row order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from statistics import fmean
from typing import Optional

from .model import NODE_LABELS, EDGE_LABELS, developer_email, file_type_of, is_node_id, node_id
from .store import GraphStore, encode_props

SCALAR_TYPES = {"str": str, "int": int, "float": float, "bool": bool}


class NotFoundError(LookupError):
    """A query target (file, developer, method, project) does not exist."""


@dataclass(frozen=True)
class QueryResult:
    columns: tuple
    rows: tuple

    def __init__(self, columns, rows):
        cols = tuple((str(name), str(kind)) for name, kind in columns)
        names = [name for name, _ in cols]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names: {names}")
        for _, kind in cols:
            if kind not in SCALAR_TYPES:
                raise ValueError(f"unsupported column type {kind!r}")
        rows = tuple(tuple(row) for row in rows)
        for row in rows:
            if len(row) != len(cols):
                raise ValueError(f"row {row!r} does not have {len(cols)} values")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "rows", rows)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.columns]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def column(self, name: str) -> list:
        i = self.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        names = self.names
        return [dict(zip(names, row)) for row in self.rows]

    def __len__(self) -> int:
        return len(self.rows)


class _Miner:
    def __init__(self, store: GraphStore, project_id: str):
        self.store = store
        self.project_id = project_id

    def _in_project(self, nid: str) -> bool:
        props = self.store.node_props(nid)
        return props is not None and props.get("project_id") == self.project_id

    def _commit_key(self, cid: str) -> tuple[int, str]:
        props = self.store.node_props(cid)
        return props["timestamp"], props["sha"]


class CommitMiner(_Miner):
    def commit_ids(self, branch: Optional[str] = None) -> list[str]:
        if branch is None:
            ids = self.store.node_ids("Commit", self.project_id)
        else:
            bid = node_id("Branch", [self.project_id, branch])
            if not self.store.has_node(bid):
                raise NotFoundError(f"branch {branch!r} not in project {self.project_id}")
            ids = [cid for cid, _ in self.store.neighbors(bid, "InBranch", "in")]
        return sorted(ids, key=self._commit_key)

    def commits(self, branch: Optional[str] = None) -> QueryResult:
        """Commits of the project (optionally of one branch) in time order."""
        rows = []
        for cid in self.commit_ids(branch):
            props = self.store.node_props(cid)
            authors = self.store.neighbors(cid, "Author", "in")
            email = self.store.node_props(authors[0][0])["email"] if authors else ""
            rows.append((props["sha"], props["timestamp"], email, props["is_merge"], props["message"]))
        return QueryResult(
            [("sha", "str"), ("timestamp", "int"), ("author_email", "str"), ("is_merge", "bool"), ("message", "str")],
            rows,
        )

    def resolve(self, sha: str) -> str:
        cid = node_id("Commit", [self.project_id, sha])
        if not self.store.has_node(cid):
            raise NotFoundError(f"commit {sha} not in project {self.project_id}")
        return cid

    def get(self, sha: str):
        return self.store.get_node(self.resolve(sha))

    def parents(self, sha: str) -> list[str]:
        cid = self.resolve(sha)
        return sorted(self.store.node_props(p)["sha"] for p, _ in self.store.neighbors(cid, "Parent", "out"))

    def branches(self) -> list[str]:
        return sorted(b.name for b in self.store.nodes_by_label("Branch", self.project_id))

    def files_changed(self, sha: str) -> QueryResult:
        cid = self.resolve(sha)
        rows = []
        for fid, props in self.store.neighbors(cid, "UpdateFile", "out"):
            path = props.get("new_path") or props.get("old_path")
            rows.append((path, props["change_type"], props["nloc"], props["added_lines"], props["removed_lines"]))
        rows.sort()
        return QueryResult(
            [("path", "str"), ("change_type", "str"), ("nloc", "int"), ("added_lines", "int"), ("removed_lines", "int")],
            rows,
        )


class DeveloperMiner(_Miner):
    def resolve(self, dev: str) -> str:
        if is_node_id(dev) and self.store.node_label(dev) == "Developer":
            return dev
        did = node_id("Developer", [developer_email("", dev)])
        if self.store.node_label(did) != "Developer":
            raise NotFoundError(f"developer {dev!r} not found")
        return did

    def commit_ids(self, dev: str) -> list[str]:
        did = self.resolve(dev)
        return [cid for cid, _ in self.store.neighbors(did, "Author", "out") if self._in_project(cid)]

    def developers(self) -> list:
        """Developers with at least one commit in the project."""
        found = []
        for dev in self.store.nodes_by_label("Developer"):
            if any(self._in_project(cid) for cid, _ in self.store.neighbors(dev.id, "Author", "out")):
                found.append(dev)
        return found

    def files(self, dev: str) -> set[str]:
        files = set()
        for cid in self.commit_ids(dev):
            files.update(fid for fid, _ in self.store.neighbors(cid, "UpdateFile", "out"))
        return files

    def method_updates(self, dev: str) -> list[tuple[str, str, dict]]:
        """(commit id, method id, edge props) for every method edit by ``dev``."""
        updates = []
        for cid in self.commit_ids(dev):
            for mid, props in self.store.neighbors(cid, "UpdateMethod", "out"):
                updates.append((cid, mid, props))
        return updates

    def files_by_type(self, dev: str) -> QueryResult:
        groups: dict[str, list[str]] = {}
        for fid in self.files(dev):
            path = self.store.node_props(fid)["current_path"]
            groups.setdefault(file_type_of(path), []).append(path)
        rows = [(ftype, len(paths), json.dumps(sorted(paths))) for ftype, paths in groups.items()]
        rows.sort(key=lambda r: (-r[1], r[0]))
        return QueryResult([("file_type", "str"), ("count", "int"), ("file_paths", "str")], rows)

    def avg_method_complexity(self, dev: str) -> Optional[float]:
        values = [props["complexity"] for _, _, props in self.method_updates(dev)]
        return fmean(values) if values else None


class FileMiner(_Miner):
    def resolve(self, file: str) -> str:
        if is_node_id(file) and self.store.node_label(file) == "File" and self._in_project(file):
            return file
        node = self.store.resolve_path(self.project_id, file)
        if node is None:
            raise NotFoundError(f"file {file!r} not in project {self.project_id}")
        return node.id

    def files(self) -> list:
        return self.store.nodes_by_label("File", self.project_id)

    def update_history(self, file: str) -> QueryResult:
        fid = self.resolve(file)
        rows = []
        for cid, props in self.store.neighbors(fid, "UpdateFile", "in"):
            timestamp, sha = self._commit_key(cid)
            rows.append((sha, timestamp, props["nloc"]))
        rows.sort(key=lambda r: (r[1], r[0]))
        return QueryResult([("commit_sha", "str"), ("timestamp", "int"), ("nloc", "int")], rows)

    def methods(self, file: str) -> list:
        fid = self.resolve(file)
        methods = [self.store.get_node(mid) for mid, _ in self.store.neighbors(fid, "HasMethod", "out")]
        return sorted(methods, key=lambda m: (m.long_name, m.id))


class MethodMiner(_Miner):
    _COLUMNS = [("method_long_name", "str"), ("commit_sha", "str"), ("timestamp", "int"), ("complexity", "int")]

    def resolve(self, method: str) -> str:
        if is_node_id(method) and self.store.node_label(method) == "Method" and self._in_project(method):
            return method
        raise NotFoundError(f"method {method!r} not in project {self.project_id}")

    def update_history(self, method: str) -> QueryResult:
        mid = self.resolve(method)
        rows = []
        for cid, props in self.store.neighbors(mid, "UpdateMethod", "in"):
            timestamp, sha = self._commit_key(cid)
            rows.append((sha, timestamp, props["complexity"]))
        rows.sort(key=lambda r: (r[1], r[0]))
        return QueryResult([("commit_sha", "str"), ("timestamp", "int"), ("complexity", "int")], rows)

    def file_complexity(self, files: FileMiner, file: str, mode: str = "iterative") -> QueryResult:
        """Complexity history of every method in a file.

        ``iterative`` lists the methods, then fetches each history with its
        own store call; ``single_pass`` walks File->Method<-Commit in one call.
        """
        if mode == "iterative":
            rows = []
            for method in files.methods(file):
                for sha, timestamp, complexity in self.update_history(method.id).rows:
                    rows.append((method.long_name, sha, timestamp, complexity, method.id))
        elif mode == "single_pass":
            fid = files.resolve(file)
            rows = []
            for mid, cid, props in self.store.traverse(fid, [("HasMethod", "out"), ("UpdateMethod", "in")]):
                timestamp, sha = self._commit_key(cid)
                rows.append((self.store.node_props(mid)["long_name"], sha, timestamp, props["complexity"], mid))
        else:
            raise ValueError(f"unknown mode {mode!r}")
        rows.sort(key=lambda r: (r[0], r[4], r[2], r[1]))
        return QueryResult(self._COLUMNS, [r[:4] for r in rows])


WORST_CASE_QUERIES = ("Q2", "Q3", "Q4", "Q5")


class MineManager:
    """Entry point for queries over one project of a store."""

    def __init__(self, store: GraphStore, project_id: str):
        self.store = store
        self.project_id = project_id

    @cached_property
    def commits(self) -> CommitMiner:
        return CommitMiner(self.store, self.project_id)

    @cached_property
    def developers(self) -> DeveloperMiner:
        return DeveloperMiner(self.store, self.project_id)

    @cached_property
    def files(self) -> FileMiner:
        return FileMiner(self.store, self.project_id)

    @cached_property
    def methods(self) -> MethodMiner:
        return MethodMiner(self.store, self.project_id)

    # -- benchmark queries --

    def q1_all(self) -> tuple[QueryResult, QueryResult]:
        """Every node and edge of the project, as two sorted lists."""
        store = self.store
        keep = set()
        for label in NODE_LABELS:
            if label != "Developer":
                keep.update(store.node_ids(label, self.project_id))
        keep.update(dev.id for dev in self.developers.developers())
        node_rows = []
        for nid in keep:
            node_rows.append((store.node_label(nid), nid, encode_props(store.node_props(nid))))
        node_rows.sort(key=lambda r: (r[0], r[1]))
        edge_rows = []
        for nid in keep:
            for label in EDGE_LABELS:
                for peer, props in store.neighbors(nid, label, "out"):
                    if peer in keep:
                        edge_rows.append((label, nid, peer, encode_props(props)))
        edge_rows.sort(key=lambda r: (r[0], r[1], r[2]))
        nodes = QueryResult([("label", "str"), ("id", "str"), ("props", "str")], node_rows)
        edges = QueryResult([("label", "str"), ("src", "str"), ("dst", "str"), ("props", "str")], edge_rows)
        return nodes, edges

    def q2_file_history(self, file: str) -> QueryResult:
        return self.files.update_history(file)

    def q3_file_complexity(self, file: str, mode: str = "iterative") -> QueryResult:
        return self.methods.file_complexity(self.files, file, mode)

    def q4_developer_files(self, dev: str) -> QueryResult:
        return self.developers.files_by_type(dev)

    def q5_developer_complexity(self, dev: str) -> Optional[float]:
        return self.developers.avg_method_complexity(dev)

    # aliases matching the operation names
    file_update_history = q2_file_history
    developer_files_by_type = q4_developer_files
    developer_avg_method_complexity = q5_developer_complexity

    def file_methods(self, file: str) -> list:
        return self.files.methods(file)

    def method_update_history(self, method: str) -> QueryResult:
        return self.methods.update_history(method)

    # -- worst-case targets --

    def target_scores(self, query: str) -> dict[str, int]:
        """Selection score of every candidate node for a benchmark query."""
        store = self.store
        if query == "Q2":
            return {fid: store.degree(fid, "UpdateFile", "in") for fid in store.node_ids("File", self.project_id)}
        if query == "Q3":
            return {
                fid: sum(store.degree(mid, "UpdateMethod", "in") for mid, _ in store.neighbors(fid, "HasMethod", "out"))
                for fid in store.node_ids("File", self.project_id)
            }
        if query == "Q4":
            return {dev.id: len(self.developers.files(dev.id)) for dev in self.developers.developers()}
        if query == "Q5":
            return {dev.id: len(self.developers.method_updates(dev.id)) for dev in self.developers.developers()}
        raise ValueError(f"no worst-case target for {query!r}")

    def worst_case(self, query: str) -> tuple[str, int]:
        scores = self.target_scores(query)
        if not scores:
            raise NotFoundError(f"project {self.project_id} has no candidates for {query}")
        best = min(scores, key=lambda nid: (-scores[nid], nid))
        return best, scores[best]

    def worst_case_target(self, query: str) -> str:
        return self.worst_case(query)[0]
