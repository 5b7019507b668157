"""Post-processing of query results: pipelines of sort/filter/select/group
steps, plus CSV and JSON writers."""
from __future__ import annotations

import csv
import io
import json
import operator
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Union

import yaml

from .miners import QueryResult

OPERATORS = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


class PipelineError(ValueError):
    """A pipeline step is malformed or references a missing column."""


@dataclass(frozen=True)
class Sort:
    column: str
    dir: str = "asc"

    def __post_init__(self):
        if self.dir not in ("asc", "desc"):
            raise PipelineError(f"sort direction must be asc or desc, got {self.dir!r}")

    def columns_after(self, columns):
        _require(columns, [self.column], "sort")
        return columns

    def run(self, result: QueryResult) -> QueryResult:
        i = result.index(self.column)
        # None sorts first ascending; the sort is stable so ties keep input order
        rows = sorted(result.rows, key=lambda r: (r[i] is not None, r[i] if r[i] is not None else 0),
                      reverse=self.dir == "desc")
        return QueryResult(result.columns, rows)


@dataclass(frozen=True)
class Filter:
    column: str
    op: str
    value: Any

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise PipelineError(f"unknown filter operator {self.op!r}")
        if isinstance(self.value, (list, dict)):
            raise PipelineError("filter value must be a scalar literal")

    def columns_after(self, columns):
        _require(columns, [self.column], "filter")
        return columns

    def run(self, result: QueryResult) -> QueryResult:
        i = result.index(self.column)
        fn = OPERATORS[self.op]
        keep = []
        for row in result.rows:
            try:
                if fn(row[i], self.value):
                    keep.append(row)
            except TypeError:
                # incomparable (e.g. None < 3): the row does not match
                pass
        return QueryResult(result.columns, keep)


@dataclass(frozen=True)
class Select:
    names: tuple

    def columns_after(self, columns):
        _require(columns, list(self.names), "select")
        types = dict(columns)
        return [(name, types[name]) for name in self.names]

    def run(self, result: QueryResult) -> QueryResult:
        idx = [result.index(name) for name in self.names]
        cols = [result.columns[i] for i in idx]
        return QueryResult(cols, [tuple(row[i] for i in idx) for row in result.rows])


@dataclass(frozen=True)
class GroupCount:
    column: str

    def columns_after(self, columns):
        _require(columns, [self.column], "group_count")
        out = [c for c in columns if c[0] == self.column] + [("count", "int")]
        if len({name for name, _ in out}) != 2:
            raise PipelineError("group_count on a column named 'count'")
        return out

    def run(self, result: QueryResult) -> QueryResult:
        i = result.index(self.column)
        counts = Counter(row[i] for row in result.rows)
        # count desc, then value asc: same convention as the developer/file-type query
        rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0] is not None, str(kv[0])))
        return QueryResult([result.columns[i], ("count", "int")], rows)


Step = Union[Sort, Filter, Select, GroupCount]


def _require(columns, names, step):
    present = {name for name, _ in columns}
    missing = [n for n in names if n not in present]
    if missing:
        raise PipelineError(f"{step}: unknown column(s) {missing}; available {sorted(present)}")


def step_from_dict(data: dict) -> Step:
    """Parse one step, e.g. ``{"sort": "timestamp", "dir": "desc"}``,
    ``{"filter": "nloc", "cmp": ">", "value": 100}``, ``{"select": [...]}``
    or ``{"group_count": "file_type"}``."""
    if not isinstance(data, dict):
        raise PipelineError(f"pipeline step must be a mapping: {data!r}")
    kinds = [k for k in ("sort", "filter", "select", "group_count") if k in data]
    if len(kinds) != 1:
        raise PipelineError(f"pipeline step needs exactly one of sort/filter/select/group_count: {data!r}")
    kind = kinds[0]
    extra = set(data) - {kind, "dir", "cmp", "value"}
    if extra:
        raise PipelineError(f"unknown keys in {kind} step: {sorted(extra)}")
    try:
        if kind == "sort":
            return Sort(data["sort"], data.get("dir", "asc"))
        if kind == "filter":
            return Filter(data["filter"], data["cmp"], data["value"])
        if kind == "select":
            names = data["select"]
            if isinstance(names, str):
                names = [names]
            return Select(tuple(names))
        return GroupCount(data["group_count"])
    except KeyError as exc:
        raise PipelineError(f"{kind} step is missing {exc}") from None


def step_to_dict(step: Step) -> dict:
    if isinstance(step, Sort):
        return {"sort": step.column, "dir": step.dir}
    if isinstance(step, Filter):
        return {"filter": step.column, "cmp": step.op, "value": step.value}
    if isinstance(step, Select):
        return {"select": list(step.names)}
    return {"group_count": step.column}


class MapperPipeline:
    """An ordered list of steps, validated against a result's columns before running."""

    def __init__(self, steps=()):
        self.steps: list[Step] = [s if not isinstance(s, dict) else step_from_dict(s) for s in steps]

    @classmethod
    def load(cls, path) -> "MapperPipeline":
        text = Path(path).read_text(encoding="utf-8")
        data = yaml.safe_load(text)  # YAML is a superset of JSON
        if isinstance(data, dict):
            data = data.get("steps", [])
        if not isinstance(data, list):
            raise PipelineError("pipeline file must hold a list of steps")
        return cls(data)

    def validate(self, columns) -> list:
        for step in self.steps:
            columns = step.columns_after(columns)
        return columns

    def apply(self, result: QueryResult) -> QueryResult:
        self.validate(result.columns)
        for step in self.steps:
            result = step.run(result)
        return result

    def then(self, other: "MapperPipeline") -> "MapperPipeline":
        return MapperPipeline(self.steps + other.steps)


def apply(pipeline: MapperPipeline, result: QueryResult) -> QueryResult:
    return pipeline.apply(result)


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_csv(result: QueryResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(result.names)
    for row in result.rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def to_json(result: QueryResult) -> str:
    return json.dumps(result.records(), sort_keys=True, ensure_ascii=False, indent=None) + "\n"


def _write(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_csv(result: QueryResult, path) -> int:
    _write(to_csv(result), path)
    return len(result)


def write_json(result: QueryResult, path) -> int:
    _write(to_json(result), path)
    return len(result)


def read_json(text: str, columns) -> QueryResult:
    """Inverse of :func:`to_json` given the column schema."""
    names = [name for name, _ in columns]
    return QueryResult(columns, [tuple(rec[n] for n in names) for rec in json.loads(text)])


def timeseries(result: QueryResult, time_column: str = "timestamp", value_column: str = "nloc") -> list[tuple]:
    ti = result.index(time_column)
    vi = result.index(value_column)
    points = []
    for row in result.rows:
        if isinstance(row[ti], bool) or not isinstance(row[ti], int):
            raise TypeError(f"{time_column} must be integral, got {row[ti]!r}")
        points.append((row[ti], row[vi]))
    return sorted(points, key=lambda p: p[0])
