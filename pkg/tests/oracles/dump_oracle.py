"""Recompute Q1-Q5 and worst-case targets from a JSONL dump, by brute force.

Standard library only; shares no code with the package. Every query scans
the full line list, which is the point: slow and obviously correct.

    python tests/oracles/dump_oracle.py DUMP.jsonl PROJECT
"""
from __future__ import annotations

import json
import math
import os
import sys


def load(path) -> tuple[list, list]:
    nodes, edges = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            (nodes if rec["t"] == "n" else edges).append(rec)
    return nodes, edges


class DumpOracle:
    def __init__(self, nodes, edges, project):
        self.nodes = nodes
        self.edges = edges
        self.project = project
        self.by_id = {n["id"]: n for n in nodes}

    @classmethod
    def from_file(cls, path, project):
        return cls(*load(path), project)

    def _in_project(self, nid):
        n = self.by_id.get(nid)
        return n is not None and n["p"].get("project_id") == self.project

    def _out(self, label, src):
        return [e for e in self.edges if e["l"] == label and e["s"] == src]

    def _in(self, label, dst):
        return [e for e in self.edges if e["l"] == label and e["d"] == dst]

    def _commit(self, cid):
        p = self.by_id[cid]["p"]
        return p["sha"], p["timestamp"]

    # Q1
    def q1(self):
        keep = {n["id"] for n in self.nodes if n["p"].get("project_id") == self.project}
        for e in self.edges:
            if e["l"] == "Author" and e["d"] in keep:
                keep.add(e["s"])
        nodes = sorted(((n["l"], n["id"], n["p"]) for n in self.nodes if n["id"] in keep),
                       key=lambda r: (r[0], r[1]))
        edges = sorted(((e["l"], e["s"], e["d"], e["p"]) for e in self.edges if e["s"] in keep and e["d"] in keep),
                       key=lambda r: (r[0], r[1], r[2]))
        return nodes, edges

    # Q2
    def q2(self, file_id):
        rows = []
        for e in self._in("UpdateFile", file_id):
            sha, ts = self._commit(e["s"])
            rows.append((sha, ts, e["p"]["nloc"]))
        return sorted(rows, key=lambda r: (r[1], r[0]))

    # Q3
    def q3(self, file_id):
        rows = []
        for h in self._out("HasMethod", file_id):
            mid = h["d"]
            long_name = self.by_id[mid]["p"]["long_name"]
            for e in self._in("UpdateMethod", mid):
                sha, ts = self._commit(e["s"])
                rows.append((long_name, mid, ts, sha, e["p"]["complexity"]))
        rows.sort()
        return [(ln, sha, ts, cx) for ln, _mid, ts, sha, cx in rows]

    def _dev_commits(self, dev_id):
        return [e["d"] for e in self._out("Author", dev_id) if self._in_project(e["d"])]

    @staticmethod
    def file_type(path):
        base = path.split("/")[-1]
        ext = os.path.splitext(base)[1]
        return ext[1:].lower() if len(ext) > 1 else "unknown"

    # Q4
    def q4(self, dev_id):
        files = set()
        for cid in self._dev_commits(dev_id):
            files.update(e["d"] for e in self._out("UpdateFile", cid))
        groups = {}
        for fid in files:
            path = self.by_id[fid]["p"]["current_path"]
            groups.setdefault(self.file_type(path), []).append(path)
        rows = [(t, len(p), json.dumps(sorted(p))) for t, p in groups.items()]
        return sorted(rows, key=lambda r: (-r[1], r[0]))

    # Q5
    def q5(self, dev_id):
        values = [e["p"]["complexity"] for cid in self._dev_commits(dev_id) for e in self._out("UpdateMethod", cid)]
        if not values:
            return None
        return math.fsum(values) / len(values)

    def worst_case(self, query):
        files = [n["id"] for n in self.nodes if n["l"] == "File" and n["p"]["project_id"] == self.project]
        devs = sorted({e["s"] for e in self.edges if e["l"] == "Author" and self._in_project(e["d"])})
        if query == "Q2":
            scores = {f: len(self._in("UpdateFile", f)) for f in files}
        elif query == "Q3":
            scores = {f: sum(len(self._in("UpdateMethod", h["d"])) for h in self._out("HasMethod", f)) for f in files}
        elif query == "Q4":
            scores = {d: len({e["d"] for c in self._dev_commits(d) for e in self._out("UpdateFile", c)}) for d in devs}
        elif query == "Q5":
            scores = {d: sum(len(self._out("UpdateMethod", c)) for c in self._dev_commits(d)) for d in devs}
        else:
            raise ValueError(query)
        if not scores:
            return None
        best = max(scores.values())
        return min(k for k, v in scores.items() if v == best), best


def main(argv=None):
    argv = argv if argv is not None else sys.argv[1:]
    oracle = DumpOracle.from_file(argv[0], argv[1])
    out = {}
    nodes, edges = oracle.q1()
    out["Q1"] = {"nodes": len(nodes), "edges": len(edges)}
    for q in ("Q2", "Q3", "Q4", "Q5"):
        target = oracle.worst_case(q)
        if target is None:
            continue
        fn = getattr(oracle, q.lower())
        out[q] = {"target": target[0], "score": target[1], "result": fn(target[0])}
    json.dump(out, sys.stdout, indent=1)
    print()


if __name__ == "__main__":
    main()
