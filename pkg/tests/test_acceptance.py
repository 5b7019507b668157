"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated
in the "acceptance criteria" section of the terminal summary.
"""
import json
import os
import time
from pathlib import Path

from repograph.bench import run_bench
from repograph.config import ProjectConfig
from repograph.driller import detect_methods, drill, language_for_path
from repograph.miners import MineManager
from repograph.store import GraphStore
from tests.conftest import drilled
from tests.oracles import git_oracle
from tests.oracles.dump_oracle import DumpOracle

DATA = Path(__file__).parent / "data"

F3_RUNTIME_S = 10.0
DESK_RUNTIME_S = 600.0
DESK_MIN_COMMITS, DESK_MAX_COMMITS = 500, 3000
QUERY_BUDGET_S = 2.0
SOURCE_SHRINK = 0.80
BATCH_SIZES = (1, 7, 50)

# Fixed author-time window for the desk repo. The synthetic history starts on
# 2019-01-01; the window drops its first week.
DESK_WINDOW = (
    int(os.environ.get("REPOGRAPH_DESK_START", 1_546_905_600)),  # 2019-01-08
    int(os.environ.get("REPOGRAPH_DESK_END", 1_577_750_400)),    # 2019-12-31
)


def _q1_parsed(manager):
    nodes, edges = manager.q1_all()
    return ([(l, i, json.loads(p)) for l, i, p in nodes.rows],
            [(l, s, d, json.loads(p)) for l, s, d, p in edges.rows])


def _dump_mismatches(store, project, dump_path):
    """Compare every query against the dump oracle; returns mismatch descriptions."""
    manager = MineManager(store, project)
    oracle = DumpOracle.from_file(dump_path, project)
    bad = []
    if _q1_parsed(manager) != oracle.q1():
        bad.append("Q1")
    for q in ("Q2", "Q3", "Q4", "Q5"):
        if manager.worst_case(q) != oracle.worst_case(q):
            bad.append(f"worst-case {q}")
    for fid in store.node_ids("File", project):
        if list(manager.q2_file_history(fid).rows) != oracle.q2(fid):
            bad.append(f"Q2 {fid}")
        if list(manager.q3_file_complexity(fid).rows) != oracle.q3(fid):
            bad.append(f"Q3 {fid}")
    for dev in manager.developers.developers():
        if list(manager.q4_developer_files(dev.id).rows) != oracle.q4(dev.id):
            bad.append(f"Q4 {dev.email}")
        if manager.q5_developer_complexity(dev.id) != oracle.q5(dev.id):
            bad.append(f"Q5 {dev.email}")
    return bad


def test_criterion_1_f3_counts_match_git_oracle(f3, criterion):
    t = time.perf_counter()
    store, _ = drilled(f3["path"], "F3")
    elapsed = time.perf_counter() - t
    expected = git_oracle.oracle_counts(f3["path"])
    got = store.label_counts()
    ok = got == expected["counts"] and expected["methods_exact"] and elapsed < F3_RUNTIME_S
    criterion(1, ok, f"F3 per-label counts {'==' if got == expected['counts'] else '!='} git oracle "
                     f"({sum(got.values())} elements), drill {elapsed:.2f}s < {F3_RUNTIME_S:.0f}s")


def test_criterion_2_desk_commit_and_developer_counts(desk_repo, criterion):
    start, end = DESK_WINDOW
    t = time.perf_counter()
    store, report = drilled(desk_repo, "DESK", start_date=start, end_date=end)
    elapsed = time.perf_counter() - t
    counts = store.label_counts()
    want_commits = git_oracle.rev_list_count(desk_repo, start, end)
    want_devs = git_oracle.distinct_authors(desk_repo, start, end)
    ok = (counts["Commit"] == want_commits and counts["Developer"] == want_devs
          and DESK_MIN_COMMITS <= want_commits <= DESK_MAX_COMMITS and elapsed < DESK_RUNTIME_S)
    criterion(2, ok, f"desk repo window [{start}, {end}]: Commit {counts['Commit']} vs rev-list {want_commits}, "
                     f"Developer {counts['Developer']} vs distinct emails {want_devs}, drill {elapsed:.1f}s "
                     f"< {DESK_RUNTIME_S:.0f}s")


def test_criterion_2_full_history_rev_list_count(desk_store, desk_repo):
    store, _ = desk_store
    assert store.label_counts()["Commit"] == git_oracle.rev_list_count(desk_repo)
    assert store.label_counts()["Developer"] == git_oracle.distinct_authors(desk_repo)


def test_criterion_3_queries_match_dump_oracle(f3_store, desk_store, desk_dump, tmp_path, criterion):
    f3_dump = tmp_path / "f3.jsonl"
    f3_store[0].export_jsonl(f3_dump)
    bad_f3 = _dump_mismatches(f3_store[0], "F3", f3_dump)
    bad_desk = _dump_mismatches(desk_store[0], "DESK", desk_dump)
    n_files = len(desk_store[0].node_ids("File", "DESK"))
    criterion(3, not bad_f3 and not bad_desk,
              f"Q1-Q5 equal dump oracle incl. ordering: F3 mismatches {bad_f3[:3]}, "
              f"desk mismatches {bad_desk[:3]} ({n_files} files checked)")


def test_criterion_4_idempotency(f3, desk_repo, desk_store, criterion):
    details = []
    ok = True
    for repo, project in ((f3["path"], "F3"), (desk_repo, "DESK")):
        store = GraphStore()
        config = ProjectConfig(project, str(repo))
        drill(config, store)
        first = store.canonical_dump()
        second_report = drill(config, store)
        created = sum(second_report.created.values())
        same = store.canonical_dump() == first
        ok &= same and created == 0
        details.append(f"{project}: dumps identical={same}, second drill created={created}")
    criterion(4, ok, "; ".join(details))


def test_criterion_5_batch_and_cache_transparency(f3, desk_repo, desk_store, tmp_path, criterion):
    details = []
    ok = True
    for repo, project, reference in ((f3["path"], "F3", None), (desk_repo, "DESK", desk_store[0])):
        dumps = {}
        for size in BATCH_SIZES:
            dumps[f"batch={size}"] = drilled(repo, project, batch_size=size)[0].canonical_dump()
        cache = tmp_path / f"cache-{project}"
        cold_store, cold = drilled(repo, project, cache_dir=str(cache))
        warm_store, warm = drilled(repo, project, cache_dir=str(cache))
        dumps["cache=cold"] = cold_store.canonical_dump()
        dumps["cache=warm"] = warm_store.canonical_dump()
        if reference is not None:
            dumps["session"] = reference.canonical_dump()
        distinct = len(set(dumps.values()))
        hits_ok = warm.cache_hits == warm.commits and cold.cache_hits == 0
        ok &= distinct == 1 and hits_ok
        details.append(f"{project}: {len(dumps)} variants -> {distinct} distinct dump(s), warm hits {warm.cache_hits}")
    criterion(5, ok, "; ".join(details))


def test_criterion_6_metrics_match_lizard_golden(criterion):
    golden = json.loads((DATA / "metrics_golden.json").read_text())
    expected = {(f["file"], f["name"], f["start_line"]): (f["ccn"], f["nloc"], f["parameter_count"])
                for f in golden["functions"]}
    got = {}
    for path in sorted((DATA / "metrics_corpus").iterdir()):
        for d in detect_methods(path.read_text(), language_for_path(path.name), path.name):
            got[(path.name, d.name, d.start_line)] = (d.complexity, d.nloc, d.parameter_count)
    diff = sorted(set(expected.items()) ^ set(got.items()))
    languages = sorted({language_for_path(f) for f, _, _ in expected})
    criterion(6, not diff and len(expected) == 20,
              f"{len(got)}/{len(expected)} functions ({', '.join(languages)}) match "
              f"{golden['tool']} {golden['version']} on CCN/NLOC/params; differences {diff[:3]}")


def test_criterion_7_q3_modes_and_call_counts(f3_store, desk_store, criterion):
    problems = []
    checked = 0
    for store, project in ((f3_store[0], "F3"), (desk_store[0], "DESK")):
        manager = MineManager(store, project)
        for fid in store.node_ids("File", project):
            n_methods = store.degree(fid, "HasMethod", "out")
            before = store.read_calls["UpdateMethod"]
            iterative = manager.q3_file_complexity(fid, "iterative")
            calls_iter = store.read_calls["UpdateMethod"] - before
            before = store.read_calls["UpdateMethod"]
            single = manager.q3_file_complexity(fid, "single_pass")
            calls_single = store.read_calls["UpdateMethod"] - before
            checked += 1
            if iterative.rows != single.rows:
                problems.append(f"rows differ for {fid}")
            if calls_iter != n_methods or calls_single != 1:
                problems.append(f"{fid}: calls {calls_iter}/{calls_single} for {n_methods} methods")
    target = MineManager(desk_store[0], "DESK").worst_case_target("Q3")
    n = desk_store[0].degree(target, "HasMethod", "out")
    criterion(7, not problems, f"{checked} files: iterative == single_pass, traversals #methods vs 1 "
                               f"(desk worst case: {n} vs 1); problems {problems[:3]}")


def test_criterion_8_source_opt_out(f3_large, criterion):
    with_src, _ = drilled(f3_large["path"], "F3", index_source_code=True)
    without, _ = drilled(f3_large["path"], "F3", index_source_code=False)
    leaked = [p for _, p in _update_file_props(without) if "source_before" in p or "source_after" in p]
    bytes_true = with_src.payload_bytes("UpdateFile")
    bytes_false = without.payload_bytes("UpdateFile")
    shrink = 1 - bytes_false / bytes_true
    criterion(8, not leaked and shrink >= SOURCE_SHRINK,
              f"no source fields when disabled ({len(leaked)} leaks); UpdateFile payload "
              f"{bytes_true} -> {bytes_false} bytes, shrink {shrink:.1%} >= {SOURCE_SHRINK:.0%}")


def _update_file_props(store):
    out = []
    for cid in store.node_ids("Commit"):
        out.extend(store.neighbors(cid, "UpdateFile", "out"))
    return out


def test_criterion_9_desk_q4_q5_under_budget(desk_repo, tmp_path, criterion):
    config = ProjectConfig("DESK", str(desk_repo))
    report = run_bench(config)
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    saved = json.loads(path.read_text())
    q4 = saved["queries"]["Q4"]["time_ms"] / 1000.0
    q5 = saved["queries"]["Q5"]["time_ms"] / 1000.0
    recorded = all("time_ms" in saved["queries"][q] for q in ("Q1", "Q2", "Q3", "Q4", "Q5"))
    ok = (report.commits >= DESK_MIN_COMMITS and q4 < QUERY_BUDGET_S and q5 < QUERY_BUDGET_S
          and recorded and not report.check())
    criterion(9, ok, f"desk ({report.commits} commits) Q4 {q4 * 1000:.1f} ms, Q5 {q5 * 1000:.1f} ms "
                     f"(< {QUERY_BUDGET_S:.0f} s, median of 3); report records Q1-Q5 timings={recorded}")
