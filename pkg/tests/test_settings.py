"""Tests for environment-derived settings."""

import os
import sys
from pathlib import Path
from unittest.mock import patch

import pytest

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from twoway_coding.settings import (
    DEFAULT_MAX_TRIALS,
    DEFAULT_OUTPUT_DIR,
    env_flag,
    load_settings,
)


def test_defaults_without_environment(tmp_path):
    """Test that unset variables fall back to the documented defaults."""
    with patch.dict(os.environ, {}, clear=True):
        settings = load_settings(dotenv_path=str(tmp_path / "missing.env"))
    assert settings.output_dir == DEFAULT_OUTPUT_DIR
    assert settings.workers == 1
    assert settings.log_level == "INFO"
    assert settings.max_trials == DEFAULT_MAX_TRIALS
    assert settings.progress is True
    assert settings.run_slow is False


def test_environment_overrides(tmp_path):
    """Test that TWOWAY_* variables override the defaults."""
    env = {
        "TWOWAY_OUTPUT_DIR": "/tmp/runs",
        "TWOWAY_WORKERS": "4",
        "TWOWAY_LOG_LEVEL": "debug",
        "TWOWAY_MAX_TRIALS": "5000",
        "TWOWAY_PROGRESS": "off",
        "TWOWAY_RUN_SLOW": "yes",
    }
    with patch.dict(os.environ, env, clear=True):
        settings = load_settings(dotenv_path=str(tmp_path / "missing.env"))
    assert settings.output_dir == "/tmp/runs"
    assert settings.workers == 4
    assert settings.log_level == "DEBUG"
    assert settings.max_trials == 5000
    assert settings.progress is False
    assert settings.run_slow is True


def test_dotenv_file_is_read(tmp_path):
    """Test that a .env file supplies values that are not already set."""
    dotenv = tmp_path / ".env"
    dotenv.write_text("TWOWAY_WORKERS=3\n", encoding="utf-8")
    with patch.dict(os.environ, {}, clear=True):
        settings = load_settings(dotenv_path=str(dotenv))
    assert settings.workers == 3


def test_invalid_worker_count():
    """Test that a non-integer or non-positive worker count is rejected."""
    with patch.dict(os.environ, {"TWOWAY_WORKERS": "many"}, clear=True):
        with pytest.raises(ValueError):
            load_settings(dotenv_path="/nonexistent/.env")
    with patch.dict(os.environ, {"TWOWAY_WORKERS": "0"}, clear=True):
        with pytest.raises(ValueError):
            load_settings(dotenv_path="/nonexistent/.env")


def test_env_flag_truthy_values():
    """Test the accepted truthy spellings."""
    for value in ("true", "1", "YES", " on "):
        with patch.dict(os.environ, {"FLAG": value}, clear=True):
            assert env_flag("FLAG") is True
    with patch.dict(os.environ, {"FLAG": "nope"}, clear=True):
        assert env_flag("FLAG", default=True) is False
    with patch.dict(os.environ, {}, clear=True):
        assert env_flag("FLAG", default=True) is True


if __name__ == "__main__":
    pytest.main([__file__])
