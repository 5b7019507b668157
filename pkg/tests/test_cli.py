import json

import pytest
from click.testing import CliRunner

from repograph import __version__
from repograph.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def f3_env(f3, tmp_path, runner, monkeypatch):
    monkeypatch.delenv("GREPO_DB", raising=False)
    config = tmp_path / "f3.yaml"
    config.write_text(f"project_id: F3\nrepo_path: {f3['path']}\ndb_path: f3.db\n")
    result = runner.invoke(main, ["drill", "--config", str(config)])
    assert result.exit_code == 0, result.stderr
    return {"config": config, "db": str(tmp_path / "f3.db"), "report": json.loads(result.stdout)}


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0 and __version__ in result.stdout


def test_drill_reports_json(f3_env):
    assert f3_env["report"]["created"]["Commit"] == 3


def test_redrill_creates_nothing(f3_env, runner):
    result = runner.invoke(main, ["drill", "--config", str(f3_env["config"])])
    assert result.exit_code == 0
    assert sum(json.loads(result.stdout)["created"].values()) == 0


def test_missing_repo_path_is_config_error(tmp_path, runner):
    config = tmp_path / "bad.yaml"
    config.write_text("project_id: P\n")
    result = runner.invoke(main, ["drill", "--config", str(config)])
    assert result.exit_code == 2 and "repo_path" in result.stderr


def test_nonexistent_repo_is_config_error(tmp_path, runner):
    config = tmp_path / "bad.yaml"
    config.write_text(f"project_id: P\nrepo_path: {tmp_path / 'nope'}\n")
    assert runner.invoke(main, ["drill", "--config", str(config)]).exit_code == 2


def test_drill_failure_exit_1(tmp_path, runner):
    not_git = tmp_path / "plain"
    not_git.mkdir()
    config = tmp_path / "c.yaml"
    config.write_text(f"project_id: P\nrepo_path: {not_git}\ndb_path: x.db\n")
    result = runner.invoke(main, ["drill", "--config", str(config)])
    assert result.exit_code == 1 and "drill failed" in result.stderr


def test_mine_q2_csv(f3_env, runner):
    result = runner.invoke(main, ["mine", "q2", "--project", "F3", "--file", "b.py", "--format", "csv",
                                  "--db", f3_env["db"]])
    assert result.exit_code == 0
    lines = result.stdout.splitlines()
    assert lines[0] == "commit_sha,timestamp,nloc" and len(lines) == 4


def test_mine_q5_prints_float(f3_env, runner):
    result = runner.invoke(main, ["mine", "q5", "--project", "F3", "--dev", "a@x.y", "--db", f3_env["db"]])
    assert result.exit_code == 0 and result.stdout == "2.0\n"


def test_mine_unknown_file_exit_3(f3_env, runner):
    result = runner.invoke(main, ["mine", "q2", "--project", "F3", "--file", "zzz.py", "--db", f3_env["db"]])
    assert result.exit_code == 3


def test_mine_missing_flag_is_usage_error(f3_env, runner):
    assert runner.invoke(main, ["mine", "q2", "--project", "F3", "--db", f3_env["db"]]).exit_code == 2


def test_mine_with_pipeline_and_out(f3_env, runner, tmp_path):
    pipe = tmp_path / "p.yaml"
    pipe.write_text("- sort: timestamp\n  dir: desc\n- select: [nloc]\n")
    out = tmp_path / "o.json"
    result = runner.invoke(main, ["mine", "q2", "--project", "F3", "--file", "a.py", "--format", "json",
                                  "--pipeline", str(pipe), "--out", str(out), "--db", f3_env["db"]])
    assert result.exit_code == 0
    assert json.loads(out.read_text()) == [{"nloc": 3}, {"nloc": 3}, {"nloc": 7}]


def test_mine_bad_pipeline_exit_2(f3_env, runner, tmp_path):
    pipe = tmp_path / "p.yaml"
    pipe.write_text("- sort: nope\n")
    result = runner.invoke(main, ["mine", "q2", "--project", "F3", "--file", "a.py", "--pipeline", str(pipe),
                                  "--db", f3_env["db"]])
    assert result.exit_code == 2


def test_grepo_db_env_and_flag_precedence(f3_env, runner, tmp_path, monkeypatch):
    monkeypatch.setenv("GREPO_DB", f3_env["db"])
    ok = runner.invoke(main, ["mine", "q5", "--project", "F3", "--dev", "a@x.y"])
    assert ok.exit_code == 0 and ok.stdout == "2.0\n"
    flag = runner.invoke(main, ["mine", "q5", "--project", "F3", "--dev", "a@x.y", "--db", str(tmp_path / "none.db")])
    assert flag.exit_code == 1


def test_export_deterministic(f3_env, runner, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        assert runner.invoke(main, ["export", "--project", "F3", "--out", str(out), "--db", f3_env["db"]]).exit_code == 0
    assert a.read_bytes() == b.read_bytes() and len(a.read_text().splitlines()) == 27


def test_export_empty_store(runner, tmp_path):
    out = tmp_path / "e.jsonl"
    result = runner.invoke(main, ["export", "--out", str(out), "--db", str(tmp_path / "empty.db")])
    assert result.exit_code == 0 and out.read_bytes() == b""


def test_corrupt_store_exit_1(runner, tmp_path):
    db = tmp_path / "bad.db"
    db.write_bytes(b"junk")
    assert runner.invoke(main, ["export", "--out", str(tmp_path / "x"), "--db", str(db)]).exit_code == 1


def test_bench_report(f3_env, runner, tmp_path):
    out = tmp_path / "bench.json"
    result = runner.invoke(main, ["bench", "--config", str(f3_env["config"]), "--out", str(out)])
    assert result.exit_code == 0, result.stderr
    report = json.loads(out.read_text())
    assert report["most_costly_insert"]["time_ms"] <= report["insert_index_time_ms"]
    assert report["queries"]["Q5"]["workload"] == 2
    assert report["queries"]["Q3"]["workload"] == 2 and report["queries"]["Q3"]["extra"]["target_degree"] == 3
    assert set(report["queries"]) == {"Q1", "Q2", "Q3", "Q4", "Q5"}
    assert report["environment"]["cpu_count"] >= 1


def test_bench_bad_config(runner, tmp_path):
    config = tmp_path / "c.yaml"
    config.write_text("project_id: P\nrepo_path: r\nbatch_size: -1\n")
    assert runner.invoke(main, ["bench", "--config", str(config), "--out", str(tmp_path / "o")]).exit_code == 2


def test_worst_case_and_file_methods(f3_env, runner):
    result = runner.invoke(main, ["mine", "worst-case", "--query", "Q4", "--project", "F3", "--format", "json",
                                  "--db", f3_env["db"]])
    assert json.loads(result.stdout)[0]["degree"] == 2
    result = runner.invoke(main, ["mine", "file-methods", "--project", "F3", "--file", "b.py", "--db", f3_env["db"]])
    assert result.exit_code == 0 and len(result.stdout.splitlines()) == 3
