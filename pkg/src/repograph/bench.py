"""Benchmark harness: cold drill, worst-case targets, median-of-3 query timings."""
from __future__ import annotations

import dataclasses
import os
import platform
import statistics
import time
from decimal import ROUND_HALF_UP, Decimal
from typing import Callable, Optional

from .config import ProjectConfig
from .driller import drill
from .miners import MineManager
from .store import GraphStore

REPEATS = 3
QUERIES = ("Q1", "Q2", "Q3", "Q4", "Q5")
WORKLOAD_UNITS = {"Q1": "elements", "Q2": "updates", "Q3": "methods", "Q4": "files", "Q5": "updates"}


def round_half_up(value: float, digits: int = 0) -> float:
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


def format_duration(ms: float) -> str:
    """Half-up rounded to whole ms, or to whole seconds above 1000 ms."""
    if ms > 1000:
        return f"{int(round_half_up(ms / 1000.0))} s"
    return f"{int(round_half_up(ms))} ms"


def median_ms(fn: Callable[[], object], repeats: int = REPEATS) -> tuple[float, object]:
    samples = []
    result = None
    for _ in range(repeats):
        t = time.perf_counter()
        result = fn()
        samples.append((time.perf_counter() - t) * 1000.0)
    return statistics.median(samples), result


def environment() -> dict:
    mem = None
    try:
        mem = os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        pass
    return {
        "cpu_count": os.cpu_count(),
        "memory_bytes": mem,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "store": "in-process",
    }


@dataclasses.dataclass
class QueryTiming:
    target: Optional[str]
    workload: int
    unit: str
    time_ms: float
    time_ms_rounded: int
    display: str
    rows: int
    extra: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass
class BenchReport:
    project_id: str
    commits: int
    nodes: int
    edges: int
    driller_time_ms: float
    insert_index_time_ms: float
    most_costly_insert: dict
    insert_ms_by_label: dict
    queries: dict
    environment: dict

    def check(self) -> list[str]:
        """Return violated report invariants (empty when valid)."""
        problems = []
        if self.most_costly_insert["time_ms"] > self.insert_index_time_ms + 1e-6:
            problems.append("most_costly_insert exceeds insert_index_time_ms")
        for name in QUERIES:
            if name not in self.queries:
                problems.append(f"missing {name}")
        return problems

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _timing(target, workload, unit, ms, rows, **extra) -> QueryTiming:
    return QueryTiming(target, workload, unit, round(ms, 3), int(round_half_up(ms)), format_duration(ms), rows, extra)


def run_queries(manager: MineManager) -> dict:
    """Time Q1-Q5 against their worst-case targets."""
    out = {}
    ms, (nodes, edges) = median_ms(manager.q1_all)
    out["Q1"] = _timing(None, len(nodes) + len(edges), "elements", ms, len(nodes) + len(edges))

    target, degree = manager.worst_case("Q2")
    ms, res = median_ms(lambda: manager.q2_file_history(target))
    out["Q2"] = _timing(target, degree, "updates", ms, len(res))

    target, degree = manager.worst_case("Q3")
    n_methods = len(manager.file_methods(target))
    ms, res = median_ms(lambda: manager.q3_file_complexity(target, "iterative"))
    ms_single, _ = median_ms(lambda: manager.q3_file_complexity(target, "single_pass"))
    out["Q3"] = _timing(target, n_methods, "methods", ms, len(res), target_degree=degree,
                        single_pass_ms=round(ms_single, 3))

    target, degree = manager.worst_case("Q4")
    ms, res = median_ms(lambda: manager.q4_developer_files(target))
    out["Q4"] = _timing(target, degree, "files", ms, len(res))

    target, degree = manager.worst_case("Q5")
    ms, res = median_ms(lambda: manager.q5_developer_complexity(target))
    out["Q5"] = _timing(target, degree, "updates", ms, 1, value=res)
    return out


def run_bench(config: ProjectConfig, store: Optional[GraphStore] = None) -> BenchReport:
    """Cold-drill ``config`` (cache disabled) into a fresh store and time the queries."""
    cold = dataclasses.replace(config, cache_dir=None)
    store = store if store is not None else GraphStore()
    report = drill(cold, store)
    label, ms = report.most_costly_insert()
    manager = MineManager(store, config.project_id)
    queries = run_queries(manager)
    return BenchReport(
        project_id=config.project_id,
        commits=report.commits,
        nodes=len(store),
        edges=store.edge_count,
        driller_time_ms=round(report.extraction_ms, 3),
        insert_index_time_ms=round(report.insert_total_ms, 3),
        most_costly_insert={"label": label, "time_ms": round(ms, 3)},
        insert_ms_by_label={k: round(v, 3) for k, v in report.insert_ms.items()},
        queries={name: dataclasses.asdict(q) for name, q in queries.items()},
        environment=environment(),
    )
