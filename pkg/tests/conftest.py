import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from repograph.config import ProjectConfig  # noqa: E402
from repograph.driller import drill  # noqa: E402
from repograph.store import GraphStore  # noqa: E402
from tests.fixtures.repos import make_desk, make_f3  # noqa: E402

# Optional: point at a real clone (500-3000 commits) instead of the synthetic history.
DESK_ENV = "REPOGRAPH_DESK_REPO"


@pytest.fixture(scope="session")
def f3(tmp_path_factory):
    return make_f3(tmp_path_factory.mktemp("f3") / "repo")


@pytest.fixture(scope="session")
def f3_large(tmp_path_factory):
    return make_f3(tmp_path_factory.mktemp("f3large") / "repo", large_files=True)


@pytest.fixture(scope="session")
def desk_repo(tmp_path_factory):
    if os.environ.get(DESK_ENV):
        return Path(os.environ[DESK_ENV])
    return make_desk(tmp_path_factory.mktemp("desk") / "repo", n_commits=600)


def drilled(repo, project="P", **kwargs):
    store = GraphStore()
    report = drill(ProjectConfig(project, str(repo), **kwargs), store)
    return store, report


@pytest.fixture(scope="session")
def f3_store(f3):
    return drilled(f3["path"], "F3")


@pytest.fixture(scope="session")
def desk_store(desk_repo):
    return drilled(desk_repo, "DESK")


@pytest.fixture(scope="session")
def desk_dump(desk_store, tmp_path_factory):
    path = tmp_path_factory.mktemp("dump") / "desk.jsonl"
    desk_store[0].export_jsonl(path)
    return path


# -- acceptance reporting: one PASS/FAIL line per criterion in the terminal summary --

ACCEPTANCE_LINES: dict = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion; fails the test when not met."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
