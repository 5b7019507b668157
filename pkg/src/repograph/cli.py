"""Command-line interface: ``repograph drill|mine|export|bench``.

Exit codes: 0 success, 1 drill/store failure, 2 invalid config or usage,
3 unknown query target.
"""
from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .bench import run_bench
from .config import ConfigError, load_config
from .driller import GitError, drill
from .mappers import MapperPipeline, PipelineError, to_csv, to_json
from .miners import MineManager, NotFoundError, QueryResult
from .model import SchemaError
from .store import GraphStore, SnapshotError, StoreLockedError, open_store

EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NOT_FOUND = 3

QUERY_NAMES = ("q1", "q2", "q3", "q4", "q5", "commits", "files-changed", "file-methods",
               "method-history", "worst-case")


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _db_path(flag: Optional[str], config_value: Optional[str] = None) -> str:
    # flag > GREPO_DB > config > default
    return flag or os.environ.get("GREPO_DB") or config_value or "repograph.db"


def _load(config_path: str):
    try:
        return load_config(config_path)
    except ConfigError as exc:
        _fail(f"invalid config: {exc}", EXIT_CONFIG)


@click.group()
@click.version_option(__version__, prog_name="repograph")
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose: bool):
    """Drill git history into a property graph and query it."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("drill")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--db", default=None, help="Store path (overrides GREPO_DB and the config).")
def cmd_drill(config_path: str, db: Optional[str]):
    """Drill the repository described by a YAML config into the store."""
    config = _load(config_path)
    if not Path(config.repo_path).is_dir():
        _fail(f"invalid config: repo_path {config.repo_path} is not a directory", EXIT_CONFIG)
    try:
        with open_store(_db_path(db, config.db_path)) as store:
            report = drill(config, store)
    except (GitError, SchemaError, SnapshotError, StoreLockedError, OSError) as exc:
        _fail(f"drill failed: {exc}", EXIT_FAILURE)
    click.echo(json.dumps(report.to_dict(), sort_keys=True))


def _run_query(manager: MineManager, name: str, file, dev, method, sha, mode, branch, part, query):
    def need(value, flag):
        if not value:
            raise click.UsageError(f"{name} requires {flag}")
        return value

    if name == "q1":
        nodes, edges = manager.q1_all()
        return edges if part == "edges" else nodes
    if name == "q2":
        return manager.q2_file_history(need(file, "--file"))
    if name == "q3":
        return manager.q3_file_complexity(need(file, "--file"), mode)
    if name == "q4":
        return manager.q4_developer_files(need(dev, "--dev"))
    if name == "q5":
        return manager.q5_developer_complexity(need(dev, "--dev"))
    if name == "commits":
        return manager.commits.commits(branch)
    if name == "files-changed":
        return manager.commits.files_changed(need(sha, "--sha"))
    if name == "file-methods":
        methods = manager.file_methods(need(file, "--file"))
        return QueryResult([("method_id", "str"), ("name", "str"), ("long_name", "str")],
                           [(m.id, m.name, m.long_name) for m in methods])
    if name == "method-history":
        return manager.method_update_history(need(method, "--method"))
    target, degree = manager.worst_case(need(query, "--query").upper())
    return QueryResult([("query", "str"), ("target", "str"), ("degree", "int")], [(query.upper(), target, degree)])


@main.command("mine")
@click.argument("query_name", type=click.Choice(QUERY_NAMES))
@click.option("--project", required=True)
@click.option("--db", default=None, help="Store path (overrides GREPO_DB).")
@click.option("--file", "file", default=None, help="File path or node id (q2, q3, file-methods).")
@click.option("--dev", default=None, help="Developer email or node id (q4, q5).")
@click.option("--method", default=None, help="Method node id (method-history).")
@click.option("--sha", default=None, help="Commit sha (files-changed).")
@click.option("--branch", default=None, help="Restrict commits to a branch.")
@click.option("--mode", type=click.Choice(["iterative", "single_pass"]), default="iterative")
@click.option("--part", type=click.Choice(["nodes", "edges"]), default="nodes", help="q1 output part.")
@click.option("--query", default=None, help="Q2..Q5 (worst-case).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--pipeline", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def cmd_mine(query_name, project, db, file, dev, method, sha, branch, mode, part, query, fmt, pipeline, out):
    """Run a query against a drilled project."""
    path = Path(_db_path(db))
    if not path.exists():
        _fail(f"store {path} does not exist", EXIT_FAILURE)
    try:
        pipe = MapperPipeline.load(pipeline) if pipeline else None
    except (PipelineError, OSError) as exc:
        _fail(f"invalid pipeline: {exc}", EXIT_CONFIG)
    try:
        with open_store(path, writable=False) as store:
            manager = MineManager(store, project)
            result = _run_query(manager, query_name, file, dev, method, sha, mode, branch, part, query)
    except NotFoundError as exc:
        _fail(str(exc), EXIT_NOT_FOUND)
    except SnapshotError as exc:
        _fail(f"cannot read store: {exc}", EXIT_FAILURE)

    if query_name == "q5":
        text = json.dumps(result) + "\n"
    else:
        if pipe is not None:
            try:
                result = pipe.apply(result)
            except PipelineError as exc:
                _fail(f"invalid pipeline: {exc}", EXIT_CONFIG)
        text = to_csv(result) if fmt == "csv" else to_json(result)
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command("export")
@click.option("--project", default=None, help="Restrict to one project (default: whole store).")
@click.option("--db", default=None, help="Store path (overrides GREPO_DB).")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_export(project, db, out):
    """Write the canonical JSONL dump."""
    path = Path(_db_path(db))
    try:
        with open_store(path, writable=False) as store:
            n = store.export_jsonl(out, project)
    except SnapshotError as exc:
        _fail(f"cannot read store: {exc}", EXIT_FAILURE)
    click.echo(json.dumps({"lines": n, "out": str(out)}))


@main.command("bench")
@click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cmd_bench(config_path, out):
    """Cold-drill a project and time Q1-Q5 on worst-case targets."""
    config = _load(config_path)
    if not Path(config.repo_path).is_dir():
        _fail(f"invalid config: repo_path {config.repo_path} is not a directory", EXIT_CONFIG)
    try:
        report = run_bench(config, GraphStore())
    except (GitError, SchemaError, OSError) as exc:
        _fail(f"bench failed: {exc}", EXIT_FAILURE)
    except NotFoundError as exc:
        _fail(f"bench failed: {exc}", EXIT_FAILURE)
    Path(out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(json.dumps({name: q["display"] for name, q in report.queries.items()}, sort_keys=True))


if __name__ == "__main__":
    main()
