import json

import pytest

from config import DEFAULTS, MAX_RECENT, ConfigManager, config_dir


def test_home_override(isolated_config):
    assert config_dir() == isolated_config
    assert ConfigManager().path == isolated_config / "config.json"


def test_defaults_without_file(tmp_path):
    config = ConfigManager(tmp_path)
    assert config.settings == DEFAULTS
    assert config.recent == []
    assert not config.path.exists()


def test_set_persists(tmp_path):
    config = ConfigManager(tmp_path)
    assert config.set("cap", "250")
    assert not config.set("cap", 250)
    assert ConfigManager(tmp_path).get("cap") == 250


@pytest.mark.parametrize("key, value", [
    ("cap", 0),
    ("samples", "-3"),
    ("oracle_cap", "many"),
    ("seed", True),
    ("colour", 1),
])
def test_set_rejects(tmp_path, key, value):
    config = ConfigManager(tmp_path)
    with pytest.raises(ValueError):
        config.set(key, value)
    assert config.settings == DEFAULTS


def test_negative_seed_is_fine(tmp_path):
    config = ConfigManager(tmp_path)
    config.set("seed", -1)
    assert config.get("seed") == -1


def test_unreadable_file_falls_back(tmp_path):
    (tmp_path / "config.json").write_text("{broken", encoding="utf-8")
    assert ConfigManager(tmp_path).settings == DEFAULTS


def test_bad_entries_are_skipped(tmp_path):
    (tmp_path / "config.json").write_text(
        json.dumps({"settings": {"cap": 3, "samples": 0, "other": 1}, "recent": ["/a"]}),
        encoding="utf-8",
    )
    config = ConfigManager(tmp_path)
    assert config.get("cap") == 3
    assert config.get("samples") == DEFAULTS["samples"]
    assert "other" not in config.settings
    assert config.recent == ["/a"]


def test_remember_moves_to_front(tmp_path):
    config = ConfigManager(tmp_path)
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    config.remember(first)
    config.remember(second)
    config.remember(first)
    assert config.recent == [str(first.resolve()), str(second.resolve())]
    assert ConfigManager(tmp_path).recent == config.recent


def test_recent_is_bounded(tmp_path):
    config = ConfigManager(tmp_path)
    for k in range(MAX_RECENT + 3):
        config.remember(tmp_path / f"m{k}.csv")
    assert len(config.recent) == MAX_RECENT
    assert config.recent[0].endswith(f"m{MAX_RECENT + 2}.csv")
