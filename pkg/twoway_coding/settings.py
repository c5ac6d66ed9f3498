# Copyright 2025 The Two-Way Coding Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Process-level settings read from the environment (and an optional .env file).
"""

import os
from dataclasses import dataclass
from typing import Optional

from dotenv import load_dotenv

TRUTHY = ["true", "1", "yes", "on"]

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_MAX_TRIALS = 10_000_000


@dataclass(frozen=True)
class Settings:
    """Environment-derived defaults for CLI runs."""

    output_dir: str = DEFAULT_OUTPUT_DIR
    workers: int = DEFAULT_WORKERS
    log_level: str = DEFAULT_LOG_LEVEL
    max_trials: int = DEFAULT_MAX_TRIALS
    progress: bool = True
    run_slow: bool = False


def env_flag(name: str, default: bool = False) -> bool:
    """
    Read a boolean environment variable.

    Args:
        name: Environment variable name
        default: Value used when the variable is unset

    Returns:
        True if the variable holds a truthy value
    """
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in TRUTHY


def _env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or not value.strip():
        return default
    try:
        parsed = int(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if parsed < 1:
        raise ValueError(f"{name} must be positive, got {parsed}")
    return parsed


def load_settings(dotenv_path: Optional[str] = None) -> Settings:
    """
    Build Settings from environment variables.

    Args:
        dotenv_path: Optional explicit .env file; the default search is used otherwise

    Returns:
        Settings instance
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)

    return Settings(
        output_dir=os.getenv("TWOWAY_OUTPUT_DIR", DEFAULT_OUTPUT_DIR),
        workers=_env_int("TWOWAY_WORKERS", DEFAULT_WORKERS),
        log_level=os.getenv("TWOWAY_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        max_trials=_env_int("TWOWAY_MAX_TRIALS", DEFAULT_MAX_TRIALS),
        progress=env_flag("TWOWAY_PROGRESS", default=True),
        run_slow=env_flag("TWOWAY_RUN_SLOW", default=False),
    )
