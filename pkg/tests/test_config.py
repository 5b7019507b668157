import datetime as dt
import logging

import pytest

from repograph.config import ConfigError, ProjectConfig, load_config


def write(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    return path


def test_load_with_defaults_and_relative_paths(tmp_path):
    cfg = load_config(write(tmp_path, "project_id: P\nrepo_path: repo\n"))
    assert cfg.batch_size == 50 and cfg.index_source_code is False and cfg.cache_dir is None
    assert cfg.repo_path == str(tmp_path / "repo")


def test_dates_accept_iso_and_unix(tmp_path):
    cfg = load_config(write(tmp_path, "project_id: P\nrepo_path: r\nstart_date: 2020-01-01\nend_date: 1600000000\n"))
    assert cfg.start_date == int(dt.datetime(2020, 1, 1, tzinfo=dt.timezone.utc).timestamp())
    assert cfg.end_date == 1_600_000_000
    assert cfg.in_range(1_590_000_000) and not cfg.in_range(1_600_000_001)


def test_unknown_key_warns(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        load_config(write(tmp_path, "project_id: P\nrepo_path: r\ncolour: blue\n"))
    assert "colour" in caplog.text


@pytest.mark.parametrize("text", [
    "repo_path: r\n",
    "project_id: P\n",
    "project_id: P\nrepo_path: r\nbatch_size: 0\n",
    "project_id: P\nrepo_path: r\nstart_date: 2021-01-01\nend_date: 2020-01-01\n",
    "project_id: P\nrepo_path: r\nindex_source_code: maybe\n",
    "project_id: 'a|b'\nrepo_path: r\n",
    "- just\n- a list\n",
    "project_id: [unclosed\n",
])
def test_invalid_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")


def test_fingerprint_tracks_source_flag():
    a = ProjectConfig("P", "r")
    assert a.fingerprint() == ProjectConfig("P", "other", batch_size=3).fingerprint()
    assert a.fingerprint() != ProjectConfig("P", "r", index_source_code=True).fingerprint()
