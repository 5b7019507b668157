import pytest

from repograph.bench import format_duration, median_ms, round_half_up, run_bench
from repograph.config import ProjectConfig


@pytest.mark.parametrize("value, expected", [(0.5, 1.0), (1.5, 2.0), (2.5, 3.0), (2.4999, 2.0)])
def test_round_half_up(value, expected):
    assert round_half_up(value) == expected


@pytest.mark.parametrize("ms, text", [(23.5, "24 ms"), (1000.0, "1000 ms"), (1499.0, "1 s"), (2500.0, "3 s")])
def test_format_duration(ms, text):
    assert format_duration(ms) == text


def test_median_of_three():
    calls = iter([0.0])
    ms, result = median_ms(lambda: next(calls, 7))
    assert result == 7 and ms >= 0


def test_bench_is_cold_and_deterministic(f3, tmp_path):
    config = ProjectConfig("F3", str(f3["path"]), cache_dir=str(tmp_path / "cache"))
    first, second = run_bench(config), run_bench(config)
    assert not (tmp_path / "cache").exists()
    assert first.check() == []
    for name in ("Q2", "Q3", "Q4", "Q5"):
        assert first.queries[name]["target"] == second.queries[name]["target"]
        assert first.queries[name]["workload"] == second.queries[name]["workload"]


def test_update_file_is_costliest_with_large_sources(f3_large):
    report = run_bench(ProjectConfig("F3", str(f3_large["path"]), index_source_code=True))
    assert report.most_costly_insert["label"] == "UpdateFile"
